#include "driftkill/model_io.hpp"

#include <cmath>

#include "driftkill/error.hpp"

namespace driftkill::io {

namespace {

constexpr int kNetVersion = 1;

// Field access that reports missing or mistyped fields as Format errors.
template <typename T>
T field(const Json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name)) throw Error(ErrorKind::Format, std::string("missing field `") + name + "`");
    try {
        return doc.at(name).get<T>();
    } catch (const Json::exception&) {
        throw Error(ErrorKind::Format, std::string("field `") + name + "` has the wrong type");
    }
}

}  // namespace

Json to_json(const nn::DenseNet& net) {
    const auto params = net.parameters();
    for (double p : params) {
        if (!std::isfinite(p)) throw Error(ErrorKind::Format, "cannot serialize a network with non-finite parameters");
    }
    return Json{{"format", "driftkill-dense-net"},
                {"version", kNetVersion},
                {"input_dim", net.input_dim()},
                {"hidden", net.hidden()},
                {"activation", std::string(nn::to_string(net.activation()))},
                {"parameters", std::vector<double>(params.begin(), params.end())}};
}

nn::DenseNet dense_net_from_json(const Json& doc) {
    if (field<std::string>(doc, "format") != "driftkill-dense-net")
        throw Error(ErrorKind::Format, "not a driftkill network document");
    if (field<int>(doc, "version") != kNetVersion) throw Error(ErrorKind::Format, "unsupported network version");
    nn::DenseNet net(field<std::size_t>(doc, "input_dim"), field<std::vector<std::size_t>>(doc, "hidden"),
                     nn::parse_activation(field<std::string>(doc, "activation")));
    const auto params = field<std::vector<double>>(doc, "parameters");
    if (params.size() != net.parameters().size())
        throw Error(ErrorKind::Format, "parameter count does not match the layer sizes");
    std::copy(params.begin(), params.end(), net.parameters().begin());
    return net;
}

Json to_json(const nn::TrainConfig& c) {
    return Json{{"learning_rate", c.learning_rate},
                {"dropout", c.dropout},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"time_steps", c.time_steps},
                {"rng_seed", c.rng_seed},
                {"noise_sigma", c.noise_sigma},
                {"hidden", c.hidden},
                {"activation", std::string(nn::to_string(c.activation))}};
}

nn::TrainConfig train_config_from_json(const Json& doc) {
    nn::TrainConfig c;
    c.learning_rate = field<double>(doc, "learning_rate");
    c.dropout = field<double>(doc, "dropout");
    c.epochs = field<std::size_t>(doc, "epochs");
    c.batch_size = field<std::size_t>(doc, "batch_size");
    c.time_steps = field<std::size_t>(doc, "time_steps");
    c.rng_seed = field<std::uint64_t>(doc, "rng_seed");
    c.noise_sigma = field<double>(doc, "noise_sigma");
    c.hidden = field<std::vector<std::size_t>>(doc, "hidden");
    c.activation = nn::parse_activation(field<std::string>(doc, "activation"));
    return c;
}

Json to_json(const dataset::ScalerParams& params) {
    Json entries = Json::array();
    for (const auto& e : params.entries)
        entries.push_back({{"name", e.name}, {"min", e.min}, {"max", e.max}, {"degenerate", e.degenerate}});
    return entries;
}

dataset::ScalerParams scaler_from_json(const Json& doc) {
    if (!doc.is_array()) throw Error(ErrorKind::Format, "scaler must be an array");
    dataset::ScalerParams params;
    for (const auto& e : doc) {
        params.entries.push_back({field<std::string>(e, "name"), field<double>(e, "min"), field<double>(e, "max"),
                                  field<bool>(e, "degenerate")});
    }
    return params;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

Json parse(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Format, e.what());
    }
}

}  // namespace driftkill::io
