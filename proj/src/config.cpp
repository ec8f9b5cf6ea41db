#include "zeroguide/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace zeroguide {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': " + value);
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': " + value);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for '" + key + "': " + value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: bad boolean for '" + key + "': " + value);
}

struct Field {
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        {"n_target", [](const RunConfig& c) { return std::to_string(c.n_target); },
         [](RunConfig& c, const std::string& v) { c.n_target = parse_int("n_target", v); }},
        {"t_feature", [](const RunConfig& c) { return format_double(c.t_feature); },
         [](RunConfig& c, const std::string& v) { c.t_feature = parse_double("t_feature", v); }},
        {"crf_iterations",
         [](const RunConfig& c) { return std::to_string(c.crf_iterations); },
         [](RunConfig& c, const std::string& v) {
             c.crf_iterations = parse_int("crf_iterations", v);
         }},
        {"crf_gaussian_sigma",
         [](const RunConfig& c) { return format_double(c.crf_gaussian_sigma); },
         [](RunConfig& c, const std::string& v) {
             c.crf_gaussian_sigma = parse_double("crf_gaussian_sigma", v);
         }},
        {"crf_gaussian_weight",
         [](const RunConfig& c) { return format_double(c.crf_gaussian_weight); },
         [](RunConfig& c, const std::string& v) {
             c.crf_gaussian_weight = parse_double("crf_gaussian_weight", v);
         }},
        {"crf_bilateral_sigma_xy",
         [](const RunConfig& c) { return format_double(c.crf_bilateral_sigma_xy); },
         [](RunConfig& c, const std::string& v) {
             c.crf_bilateral_sigma_xy = parse_double("crf_bilateral_sigma_xy", v);
         }},
        {"crf_bilateral_sigma_rgb",
         [](const RunConfig& c) { return format_double(c.crf_bilateral_sigma_rgb); },
         [](RunConfig& c, const std::string& v) {
             c.crf_bilateral_sigma_rgb = parse_double("crf_bilateral_sigma_rgb", v);
         }},
        {"crf_bilateral_weight",
         [](const RunConfig& c) { return format_double(c.crf_bilateral_weight); },
         [](RunConfig& c, const std::string& v) {
             c.crf_bilateral_weight = parse_double("crf_bilateral_weight", v);
         }},
        {"sigma_sq", [](const RunConfig& c) { return format_double(c.sigma_sq); },
         [](RunConfig& c, const std::string& v) { c.sigma_sq = parse_double("sigma_sq", v); }},
        {"layer_start", [](const RunConfig& c) { return std::to_string(c.layer_start); },
         [](RunConfig& c, const std::string& v) { c.layer_start = parse_int("layer_start", v); }},
        {"layer_end", [](const RunConfig& c) { return std::to_string(c.layer_end); },
         [](RunConfig& c, const std::string& v) { c.layer_end = parse_int("layer_end", v); }},
        {"subtract_global",
         [](const RunConfig& c) { return std::string(c.subtract_global ? "true" : "false"); },
         [](RunConfig& c, const std::string& v) {
             c.subtract_global = parse_bool("subtract_global", v);
         }},
        {"tau_merge", [](const RunConfig& c) { return format_double(c.tau_merge); },
         [](RunConfig& c, const std::string& v) { c.tau_merge = parse_double("tau_merge", v); }},
        {"tau_sbert", [](const RunConfig& c) { return format_double(c.tau_sbert); },
         [](RunConfig& c, const std::string& v) { c.tau_sbert = parse_double("tau_sbert", v); }},
        {"tau_clip", [](const RunConfig& c) { return format_double(c.tau_clip); },
         [](RunConfig& c, const std::string& v) { c.tau_clip = parse_double("tau_clip", v); }},
        {"tau_iou", [](const RunConfig& c) { return format_double(c.tau_iou); },
         [](RunConfig& c, const std::string& v) { c.tau_iou = parse_double("tau_iou", v); }},
        {"decoder", [](const RunConfig& c) { return c.decoder; },
         [](RunConfig& c, const std::string& v) { c.decoder = v; }},
        {"backend", [](const RunConfig& c) { return c.backend; },
         [](RunConfig& c, const std::string& v) { c.backend = v; }},
        {"dataset", [](const RunConfig& c) { return c.dataset; },
         [](RunConfig& c, const std::string& v) { c.dataset = v; }},
        {"class_subset", [](const RunConfig& c) { return c.class_subset; },
         [](RunConfig& c, const std::string& v) { c.class_subset = v; }},
        {"vocabulary", [](const RunConfig& c) { return c.vocabulary; },
         [](RunConfig& c, const std::string& v) { c.vocabulary = v; }},
        {"ignore_index", [](const RunConfig& c) { return std::to_string(c.ignore_index); },
         [](RunConfig& c, const std::string& v) {
             c.ignore_index = parse_int("ignore_index", v);
         }},
        {"workers", [](const RunConfig& c) { return std::to_string(c.workers); },
         [](RunConfig& c, const std::string& v) { c.workers = parse_int("workers", v); }},
        {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); }},
        {"saliency_dump",
         [](const RunConfig& c) { return std::string(c.saliency_dump ? "true" : "false"); },
         [](RunConfig& c, const std::string& v) {
             c.saliency_dump = parse_bool("saliency_dump", v);
         }},
        // out_dir is accepted from files for convenience but never echoed, so
        // run directories stay byte-identical across output locations.
        {"out_dir", [](const RunConfig& c) { return c.out_dir; },
         [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
    };
    return table;
}

}  // namespace

CrfParams RunConfig::crf_params() const {
    CrfParams p;
    p.iterations = crf_iterations;
    p.gaussian_sigma_xy = crf_gaussian_sigma;
    p.gaussian_weight = crf_gaussian_weight;
    p.bilateral_sigma_xy = crf_bilateral_sigma_xy;
    p.bilateral_sigma_rgb = crf_bilateral_sigma_rgb;
    p.bilateral_weight = crf_bilateral_weight;
    return p;
}

OversegmentParams RunConfig::oversegment_params() const {
    OversegmentParams p;
    p.n_target = n_target;
    p.t_feature = t_feature;
    p.crf = crf_params();
    return p;
}

GlobalSubtractionConfig RunConfig::subtraction_config() const {
    GlobalSubtractionConfig c;
    c.sigma_sq = sigma_sq;
    c.layer_start = layer_start;
    c.layer_end = layer_end;
    c.subtract = subtract_global;
    return c;
}

bool RunConfig::is_replay() const { return backend.rfind("replay:", 0) == 0; }

std::string RunConfig::replay_path() const {
    return is_replay() ? backend.substr(7) : std::string();
}

void RunConfig::validate() const {
    if (n_target < 1) throw ConfigError("config: n_target must be >= 1");
    if (t_feature < -1.0 || t_feature > 1.0) {
        throw ConfigError("config: t_feature must lie in [-1, 1]");
    }
    if (crf_iterations < 0) throw ConfigError("config: crf_iterations must be >= 0");
    if (crf_gaussian_sigma <= 0 || crf_bilateral_sigma_xy <= 0 || crf_bilateral_sigma_rgb <= 0) {
        throw ConfigError("config: CRF kernel widths must be positive");
    }
    if (crf_gaussian_weight < 0 || crf_bilateral_weight < 0) {
        throw ConfigError("config: CRF kernel weights must be >= 0");
    }
    if (sigma_sq <= 0) throw ConfigError("config: sigma_sq must be positive");
    if (layer_start < 1 || layer_end < layer_start) {
        throw ConfigError("config: mask layer range is invalid");
    }
    if (tau_sbert < -1.0 || tau_sbert > 1.0) {
        throw ConfigError("config: tau_sbert must lie in [-1, 1]");
    }
    if (tau_clip < -1.0 || tau_clip > 1.0) {
        throw ConfigError("config: tau_clip must lie in [-1, 1]");
    }
    if (tau_iou < 0.0 || tau_iou > 1.0) throw ConfigError("config: tau_iou must lie in [0, 1]");
    if (decoder != "retrieval" && decoder != "generative") {
        throw ConfigError("config: decoder must be 'retrieval' or 'generative'");
    }
    if (backend != "live" && (!is_replay() || replay_path().empty())) {
        throw ConfigError("config: backend must be 'live' or 'replay:<file>'");
    }
    if (ignore_index < 0 || ignore_index > 255) {
        throw ConfigError("config: ignore_index must lie in [0, 255]");
    }
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const Field& f : fields()) {
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig parsed = cfg;
    std::istringstream lines(buf.str());
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
            line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        const auto eq = line.find('=', start);
        if (eq == std::string::npos) {
            throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        }
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        const auto vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        apply_config_entry(parsed, key, value);
    }
    cfg = parsed;
}

std::string echo_config(const RunConfig& cfg) {
    std::string out;
    for (const Field& f : fields()) {
        if (std::string(f.key) == "out_dir") continue;
        out += f.key;
        out += '=';
        out += f.get(cfg);
        out += '\n';
    }
    return out;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        while (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config: expected key=value");
        apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

}  // namespace zeroguide
