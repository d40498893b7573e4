#include "driftkill/geodesy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>
#include <utility>

#include "driftkill/error.hpp"

namespace driftkill::geodesy {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double normalize_lon(double lon) {
    double r = std::fmod(lon, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

}  // namespace

GeoPoint::GeoPoint(double lat_deg, double lon_deg) {
    if (!std::isfinite(lat_deg) || !std::isfinite(lon_deg) || lat_deg < -90.0 || lat_deg > 90.0) {
        std::ostringstream msg;
        msg << "invalid geographic point (" << lat_deg << ", " << lon_deg << ")";
        throw Error(ErrorKind::InvalidInput, msg.str());
    }
    lat_ = lat_deg;
    lon_ = normalize_lon(lon_deg);
}

double Ellipsoid::meridional_radius(double lat_deg) const noexcept {
    const double e2 = eccentricity_sq();
    const double s = std::sin(lat_deg * kDegToRad);
    const double w = 1.0 - e2 * s * s;
    return semi_major_a * (1.0 - e2) / (w * std::sqrt(w));
}

double Ellipsoid::prime_vertical_radius(double lat_deg) const noexcept {
    const double e2 = eccentricity_sq();
    const double s = std::sin(lat_deg * kDegToRad);
    return semi_major_a / std::sqrt(1.0 - e2 * s * s);
}

double vincenty_inverse(const GeoPoint& p1, const GeoPoint& p2, const Ellipsoid& ellipsoid,
                        const VincentyOptions& options) {
    if (p1 == p2) return 0.0;

    // Canonical argument order makes the result exactly symmetric.
    const bool first = std::pair(p1.lat(), p1.lon()) <= std::pair(p2.lat(), p2.lon());
    const GeoPoint& a = first ? p1 : p2;
    const GeoPoint& b = first ? p2 : p1;

    const double f = ellipsoid.flattening_f;
    const double major = ellipsoid.semi_major_a;
    const double minor = ellipsoid.semi_minor_b();

    double L = (b.lon() - a.lon()) * kDegToRad;
    if (L > std::numbers::pi) L -= 2.0 * std::numbers::pi;
    if (L < -std::numbers::pi) L += 2.0 * std::numbers::pi;

    // Reduced latitudes.
    const double U1 = std::atan((1.0 - f) * std::tan(a.lat() * kDegToRad));
    const double U2 = std::atan((1.0 - f) * std::tan(b.lat() * kDegToRad));
    const double sinU1 = std::sin(U1), cosU1 = std::cos(U1);
    const double sinU2 = std::sin(U2), cosU2 = std::cos(U2);

    double lambda = L;
    double sin_sigma = 0.0, cos_sigma = 0.0, sigma = 0.0;
    double cos2_alpha = 0.0, cos_2sigma_m = 0.0;

    bool converged = false;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const double sin_lambda = std::sin(lambda);
        const double cos_lambda = std::cos(lambda);
        const double t1 = cosU2 * sin_lambda;
        const double t2 = cosU1 * sinU2 - sinU1 * cosU2 * cos_lambda;
        sin_sigma = std::sqrt(t1 * t1 + t2 * t2);
        if (sin_sigma == 0.0) return 0.0;  // coincident after normalization
        cos_sigma = sinU1 * sinU2 + cosU1 * cosU2 * cos_lambda;
        sigma = std::atan2(sin_sigma, cos_sigma);
        const double sin_alpha = cosU1 * cosU2 * sin_lambda / sin_sigma;
        cos2_alpha = 1.0 - sin_alpha * sin_alpha;
        // Equatorial lines have cos^2(alpha) = 0.
        cos_2sigma_m = cos2_alpha != 0.0 ? cos_sigma - 2.0 * sinU1 * sinU2 / cos2_alpha : 0.0;
        const double C = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
        const double previous = lambda;
        lambda = L + (1.0 - C) * f * sin_alpha *
                         (sigma + C * sin_sigma *
                                      (cos_2sigma_m + C * cos_sigma * (-1.0 + 2.0 * cos_2sigma_m * cos_2sigma_m)));
        if (std::abs(lambda) > std::numbers::pi) break;
        if (std::abs(lambda - previous) <= options.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "Vincenty inverse did not converge for (" << a.lat() << ", " << a.lon() << ") -> (" << b.lat()
            << ", " << b.lon() << ")";
        throw Error(ErrorKind::NonConvergence, msg.str());
    }

    const double u2 = cos2_alpha * (major * major - minor * minor) / (minor * minor);
    const double A = 1.0 + u2 / 16384.0 * (4096.0 + u2 * (-768.0 + u2 * (320.0 - 175.0 * u2)));
    const double B = u2 / 1024.0 * (256.0 + u2 * (-128.0 + u2 * (74.0 - 47.0 * u2)));
    const double c2m2 = cos_2sigma_m * cos_2sigma_m;
    const double delta_sigma =
        B * sin_sigma *
        (cos_2sigma_m + B / 4.0 *
                            (cos_sigma * (-1.0 + 2.0 * c2m2) -
                             B / 6.0 * cos_2sigma_m * (-3.0 + 4.0 * sin_sigma * sin_sigma) * (-3.0 + 4.0 * c2m2)));
    return minor * A * (sigma - delta_sigma);
}

double heading_delta(double h_prev_deg, double h_curr_deg) noexcept {
    double d = std::fmod(h_curr_deg - h_prev_deg, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

double gps_yaw_rate(double h_prev_deg, double h_curr_deg, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::ZeroDt, "yaw rate needs a positive time step");
    return heading_delta(h_prev_deg, h_curr_deg) * kDegToRad / dt;
}

}  // namespace driftkill::geodesy
