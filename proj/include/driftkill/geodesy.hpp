#pragma once

namespace driftkill::geodesy {

/// A geographic position in degrees. Longitude is normalized to (-180, 180].
class GeoPoint {
public:
    GeoPoint() = default;
    /// Throws Error(InvalidInput) if latitude is outside [-90, 90] or either value is not finite.
    GeoPoint(double lat_deg, double lon_deg);

    double lat() const noexcept { return lat_; }
    double lon() const noexcept { return lon_; }

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

private:
    double lat_ = 0.0;
    double lon_ = 0.0;
};

struct Ellipsoid {
    double semi_major_a;
    double flattening_f;

    double semi_minor_b() const noexcept { return semi_major_a * (1.0 - flattening_f); }
    /// First eccentricity squared, e^2 = f(2 - f).
    double eccentricity_sq() const noexcept { return flattening_f * (2.0 - flattening_f); }
    /// Meridional radius of curvature at `lat_deg`.
    double meridional_radius(double lat_deg) const noexcept;
    /// Prime-vertical radius of curvature at `lat_deg`.
    double prime_vertical_radius(double lat_deg) const noexcept;
};

inline constexpr Ellipsoid kWgs84{6378137.0, 1.0 / 298.257223563};

struct VincentyOptions {
    double tolerance = 1e-12;  // on lambda, radians
    int max_iterations = 200;
};

/// Geodesic distance in meters between two points (Vincenty inverse formula).
///
/// The result is symmetric in its arguments to the last bit: the pair is put in a
/// canonical order before iterating. Nearly antipodal pairs for which the lambda
/// iteration does not settle throw Error(NonConvergence).
double vincenty_inverse(const GeoPoint& p1, const GeoPoint& p2, const Ellipsoid& ellipsoid = kWgs84,
                        const VincentyOptions& options = {});

/// Signed shortest angular difference `h_curr - h_prev` in (-180, 180] for compass headings.
double heading_delta(double h_prev_deg, double h_curr_deg) noexcept;

/// Yaw rate in rad/s implied by two headings `dt` seconds apart. Throws Error(ZeroDt) if dt <= 0.
double gps_yaw_rate(double h_prev_deg, double h_curr_deg, double dt);

}  // namespace driftkill::geodesy
