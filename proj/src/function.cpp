#include "skewsim/function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "skewsim/error.hpp"

namespace skewsim {

namespace {

double number_or(const Json& desc, const char* key, double fallback) {
    auto it = desc.find(key);
    if (it == desc.end()) return fallback;
    if (!it->is_number()) throw ConfigError(std::string("function field '") + key + "' must be a number");
    return it->get<double>();
}

double required_number(const Json& desc, const char* key) {
    auto it = desc.find(key);
    if (it == desc.end() || !it->is_number())
        throw ConfigError(std::string("function of kind '") + desc.value("kind", "?") +
                          "' requires numeric field '" + key + "'");
    return it->get<double>();
}

std::vector<double> required_array(const Json& desc, const char* key) {
    auto it = desc.find(key);
    if (it == desc.end() || !it->is_array() || it->empty())
        throw ConfigError(std::string("function field '") + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number()) throw ConfigError(std::string("function field '") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

RealFunction make_table(const Json& desc) {
    auto xs = required_array(desc, "x");
    auto ys = required_array(desc, "y");
    if (xs.size() != ys.size()) throw ConfigError("table function: x and y lengths differ");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw ConfigError("table function: x must be strictly increasing");
    return [xs = std::move(xs), ys = std::move(ys)](double x) {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        auto i = static_cast<std::size_t>(it - xs.begin()) - 1;
        double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] + w * (ys[i + 1] - ys[i]);
    };
}

RealFunction make_kind(const Json& desc) {
    if (!desc.is_object()) throw ConfigError("function description must be an object");
    auto kind_it = desc.find("kind");
    if (kind_it == desc.end() || !kind_it->is_string()) throw ConfigError("function description needs a string 'kind'");
    const std::string kind = kind_it->get<std::string>();

    if (kind == "const") {
        check_keys(desc, {"kind", "support", "value"}, "function of kind 'const'");
        double c = required_number(desc, "value");
        return [c](double) { return c; };
    }
    if (kind == "poly") {
        check_keys(desc, {"kind", "support", "coeffs"}, "function of kind 'poly'");
        auto coeffs = required_array(desc, "coeffs");
        return [coeffs = std::move(coeffs)](double x) {
            double acc = 0.0;
            for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
            return acc;
        };
    }
    if (kind == "power") {
        check_keys(desc, {"kind", "support", "exponent", "scale", "center", "offset", "cap"}, "function of kind 'power'");
        double gamma = required_number(desc, "exponent");
        double scale = number_or(desc, "scale", 1.0);
        double center = number_or(desc, "center", 0.0);
        double offset = number_or(desc, "offset", 0.0);
        double cap = number_or(desc, "cap", std::numeric_limits<double>::infinity());
        return [=](double x) { return offset + scale * std::min(std::pow(std::abs(x - center), gamma), cap); };
    }
    if (kind == "step") {
        check_keys(desc, {"kind", "support", "at", "left", "right"}, "function of kind 'step'");
        double at = required_number(desc, "at");
        double left = required_number(desc, "left");
        double right = required_number(desc, "right");
        return [=](double x) { return x >= at ? right : left; };
    }
    if (kind == "indicator") {
        check_keys(desc, {"kind", "support", "lo", "hi", "inside", "outside", "lo_closed", "hi_closed"}, "function of kind 'indicator'");
        double lo = required_number(desc, "lo");
        double hi = required_number(desc, "hi");
        double inside = number_or(desc, "inside", 1.0);
        double outside = number_or(desc, "outside", 0.0);
        bool lo_closed = desc.value("lo_closed", true);
        bool hi_closed = desc.value("hi_closed", false);
        return [=](double x) {
            bool above = lo_closed ? x >= lo : x > lo;
            bool below = hi_closed ? x <= hi : x < hi;
            return above && below ? inside : outside;
        };
    }
    if (kind == "table") {
        check_keys(desc, {"kind", "support", "x", "y"}, "function of kind 'table'");
        return make_table(desc);
    }
    if (kind == "cos") {
        check_keys(desc, {"kind", "support", "amplitude", "frequency", "phase", "offset"}, "function of kind 'cos'");
        double amp = number_or(desc, "amplitude", 1.0);
        double freq = number_or(desc, "frequency", 1.0);
        double phase = number_or(desc, "phase", 0.0);
        double offset = number_or(desc, "offset", 0.0);
        return [=](double x) { return offset + amp * std::cos(freq * x + phase); };
    }
    if (kind == "tanh") {
        check_keys(desc, {"kind", "support", "center", "width", "low", "high"}, "function of kind 'tanh'");
        double center = number_or(desc, "center", 0.0);
        double width = number_or(desc, "width", 1.0);
        double low = number_or(desc, "low", 0.0);
        double high = number_or(desc, "high", 1.0);
        if (!(width > 0.0)) throw ConfigError("tanh function: width must be positive");
        return [=](double x) { return low + (high - low) * 0.5 * (1.0 + std::tanh((x - center) / width)); };
    }
    if (kind == "osc") {
        check_keys(desc, {"kind", "support", "center", "offset", "scale"}, "function of kind 'osc'");
        double center = number_or(desc, "center", 0.0);
        double offset = number_or(desc, "offset", 1.0);
        double scale = number_or(desc, "scale", 1.0);
        return [=](double x) {
            double d = x - center;
            return d == 0.0 ? offset : offset + scale * std::abs(std::sin(1.0 / d));
        };
    }
    throw ConfigError("unknown function kind '" + kind + "'");
}

}  // namespace

RealFunction make_function(const Json& desc) {
    RealFunction base = make_kind(desc);
    auto support = desc.find("support");
    if (support == desc.end()) return base;
    if (!support->is_array() || support->size() != 2 || !(*support)[0].is_number() || !(*support)[1].is_number())
        throw ConfigError("function 'support' must be [lo, hi]");
    double lo = (*support)[0].get<double>();
    double hi = (*support)[1].get<double>();
    if (!(lo <= hi)) throw ConfigError("function 'support' needs lo <= hi");
    return [base = std::move(base), lo, hi](double x) { return x >= lo && x <= hi ? base(x) : 0.0; };
}

TimeFunction make_time_function(const Json& desc) {
    RealFunction fn = make_function(desc);
    return [fn = std::move(fn)](double, double x) { return fn(x); };
}

std::uint64_t hash_json(const Json& doc) {
    const std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) return;
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

}  // namespace skewsim
