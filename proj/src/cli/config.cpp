#include "hypobench/cli/config.hpp"

#include <cstdio>
#include <set>

#include "hypobench/common/errors.hpp"
#include "hypobench/common/io.hpp"
#include "json.hpp"

namespace hypobench::cli {

namespace {

using nlohmann::json;

// Walks one JSON object, reading known keys and rejecting the rest.
class Section {
   public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config: " + where() + " must be an object");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError("config: unknown key " + child(key));
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: " + child(key) + " has the wrong type");
        }
    }

    void get_size(const std::string& key, std::size_t& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned()) throw ConfigError("config: " + child(key) + " must be a non-negative integer");
        out = v.get<std::size_t>();
    }

    void get_sizes(const std::string& key, std::vector<std::size_t>& out) {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError("config: " + child(key) + " must be an array");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number_unsigned()) throw ConfigError("config: " + child(key) + " must hold non-negative integers");
            out.push_back(e.get<std::size_t>());
        }
    }

    void get_ranges(const std::string& key, std::vector<DateRange>& out) {
        std::vector<std::string> text;
        get(key, text);
        if (!has(key)) return;
        out.clear();
        for (const auto& t : text) {
            try {
                out.push_back(parse_date_range(t));
            } catch (const Error& e) {
                throw ConfigError("config: " + child(key) + ": " + e.what());
            }
        }
    }

    Section sub(const std::string& key) {
        seen_.insert(key);
        return Section(j_.contains(key) ? j_.at(key) : empty(), child(key));
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

   private:
    static const json& empty() {
        static const json e = json::object();
        return e;
    }
    std::string where() const { return path_.empty() ? "the top level" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<std::string> range_strings(const std::vector<DateRange>& ranges) {
    std::vector<std::string> out;
    for (const auto& r : ranges) out.push_back(format_date_range(r));
    return out;
}

json to_json(const RunConfig& c) {
    const auto& s = c.data.synth;
    json j;
    j["seed"] = c.seed;
    j["data"] = {{"source", c.data.synthetic ? "synthetic" : "file"},
                 {"path", c.data.path.string()},
                 {"synthetic",
                  {{"n_cells", s.n_cells},
                   {"n_days", s.n_days},
                   {"seasons", range_strings(s.seasons)},
                   {"hypoxia_base_rate", s.hypoxia_base_rate},
                   {"rng_seed", s.rng_seed},
                   {"noise_scale", s.noise_scale},
                   {"depth_bins", s.depth_bins},
                   {"land_fraction", s.land_fraction},
                   {"driver_gain", s.driver_gain},
                   {"persistence", s.persistence},
                   {"smoothing", s.smoothing},
                   {"burn_in_days", s.burn_in_days}}}};
    j["split"] = {{"test_periods", range_strings(c.test_periods)}};
    j["preprocess"] = {{"threshold", c.sequence.threshold},
                       {"inclusive", c.sequence.inclusive},
                       {"window", c.sequence.window},
                       {"lead", c.sequence.lead},
                       {"hour_encoding", c.features.hour_encoding}};
    std::vector<std::string> tags;
    for (auto a : c.models) tags.emplace_back(models::architecture_tag(a));
    j["models"] = tags;
    const auto& m = c.model;
    j["model_overrides"] = {
        {"bilstm",
         {{"hidden", m.bilstm.hidden},
          {"layers", m.bilstm.layers},
          {"dropout", m.bilstm.dropout},
          {"forget_bias", m.bilstm.forget_bias}}},
        {"tcn",
         {{"channels", m.tcn.channels},
          {"kernel", m.tcn.kernel},
          {"dilations", m.tcn.dilations},
          {"dropout", m.tcn.dropout}}},
        {"medformer",
         {{"width", m.medformer.width},
          {"heads", m.medformer.heads},
          {"layers", m.medformer.layers},
          {"ffn", m.medformer.ffn},
          {"patch_lengths", m.medformer.patch_lengths},
          {"causal_mask", m.medformer.causal_mask},
          {"dropout", m.medformer.dropout}}},
        {"sttransformer",
         {{"width", m.sttransformer.width},
          {"heads", m.sttransformer.heads},
          {"layers", m.sttransformer.layers},
          {"ffn", m.sttransformer.ffn},
          {"dropout", m.sttransformer.dropout}}}};
    const auto& t = c.train;
    j["train"] = {{"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"lr", t.lr},
                  {"use_smote", t.use_smote},
                  {"use_weighted_sampling", t.use_weighted_sampling},
                  {"micro_batch", t.micro_batch},
                  {"smote", {{"k_neighbors", t.smote.k_neighbors}, {"target_ratio", t.smote.target_ratio}}}};
    j["compare"] = {{"continuity_correction", c.continuity_correction}};
    return j;
}

}  // namespace

RunConfig::RunConfig() {
    data.synth.seasons = {parse_date_range("2019-06-01..2019-07-30"), parse_date_range("2020-06-01..2020-07-30")};
    data.synth.n_days = 120;
    data.synth.rng_seed = seed;
    test_periods = {data.synth.seasons.back()};
    train.seed = seed;
}

models::ModelConfig RunConfig::model_for(models::Architecture a) const {
    models::ModelConfig m = model;
    m.architecture = a;
    return m;
}

void apply_seed(RunConfig& c, std::uint64_t seed) {
    c.seed = seed;
    c.data.synth.rng_seed = seed;
    c.train.seed = seed;
}

RunConfig parse_run_config(std::string_view text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    RunConfig c;
    Section top(root, "");
    top.get("seed", c.seed);
    c.data.synth.rng_seed = c.seed;
    c.train.seed = c.seed;
    std::string out_dir;
    top.get("output_dir", out_dir);
    if (!out_dir.empty()) c.output_dir = out_dir;
    {
        Section d = top.sub("data");
        std::string source = "synthetic", path;
        d.get("source", source);
        d.get("path", path);
        if (source != "synthetic" && source != "file") {
            throw ConfigError("config: data.source must be \"synthetic\" or \"file\", got \"" + source + "\"");
        }
        c.data.synthetic = source == "synthetic";
        c.data.path = path;
        if (!c.data.synthetic && path.empty()) throw ConfigError("config: data.path is required for a file source");
        Section s = d.sub("synthetic");
        auto& sc = c.data.synth;
        s.get_size("n_cells", sc.n_cells);
        s.get_size("n_days", sc.n_days);
        s.get_ranges("seasons", sc.seasons);
        s.get("hypoxia_base_rate", sc.hypoxia_base_rate);
        s.get("rng_seed", sc.rng_seed);
        s.get("noise_scale", sc.noise_scale);
        s.get_size("depth_bins", sc.depth_bins);
        s.get("land_fraction", sc.land_fraction);
        s.get("driver_gain", sc.driver_gain);
        s.get("persistence", sc.persistence);
        s.get("smoothing", sc.smoothing);
        s.get_size("burn_in_days", sc.burn_in_days);
    }
    {
        Section s = top.sub("split");
        if (s.has("test_periods")) {
            s.get_ranges("test_periods", c.test_periods);
        } else if (c.data.synthetic && !c.data.synth.seasons.empty()) {
            c.test_periods = {c.data.synth.seasons.back()};
        } else {
            c.test_periods.clear();
        }
    }
    {
        Section p = top.sub("preprocess");
        p.get("threshold", c.sequence.threshold);
        p.get("inclusive", c.sequence.inclusive);
        p.get_size("window", c.sequence.window);
        p.get_size("lead", c.sequence.lead);
        p.get("hour_encoding", c.features.hour_encoding);
    }
    if (top.has("models")) {
        std::vector<std::string> tags;
        top.get("models", tags);
        c.models.clear();
        for (const auto& tag : tags) {
            const auto a = models::parse_architecture(tag);
            if (std::find(c.models.begin(), c.models.end(), a) != c.models.end()) {
                throw ConfigError("config: model " + tag + " listed twice");
            }
            c.models.push_back(a);
        }
    }
    {
        Section o = top.sub("model_overrides");
        auto& m = c.model;
        {
            Section s = o.sub("bilstm");
            s.get_size("hidden", m.bilstm.hidden);
            s.get_size("layers", m.bilstm.layers);
            s.get("dropout", m.bilstm.dropout);
            s.get("forget_bias", m.bilstm.forget_bias);
        }
        {
            Section s = o.sub("tcn");
            s.get_size("channels", m.tcn.channels);
            s.get_size("kernel", m.tcn.kernel);
            s.get_sizes("dilations", m.tcn.dilations);
            s.get("dropout", m.tcn.dropout);
        }
        {
            Section s = o.sub("medformer");
            s.get_size("width", m.medformer.width);
            s.get_size("heads", m.medformer.heads);
            s.get_size("layers", m.medformer.layers);
            s.get_size("ffn", m.medformer.ffn);
            s.get_sizes("patch_lengths", m.medformer.patch_lengths);
            s.get("causal_mask", m.medformer.causal_mask);
            s.get("dropout", m.medformer.dropout);
        }
        {
            Section s = o.sub("sttransformer");
            s.get_size("width", m.sttransformer.width);
            s.get_size("heads", m.sttransformer.heads);
            s.get_size("layers", m.sttransformer.layers);
            s.get_size("ffn", m.sttransformer.ffn);
            s.get("dropout", m.sttransformer.dropout);
        }
    }
    {
        Section t = top.sub("train");
        t.get_size("epochs", c.train.epochs);
        t.get_size("batch_size", c.train.batch_size);
        t.get("lr", c.train.lr);
        t.get("use_smote", c.train.use_smote);
        t.get("use_weighted_sampling", c.train.use_weighted_sampling);
        t.get_size("micro_batch", c.train.micro_batch);
        Section s = t.sub("smote");
        s.get_size("k_neighbors", c.train.smote.k_neighbors);
        s.get("target_ratio", c.train.smote.target_ratio);
    }
    {
        Section s = top.sub("compare");
        s.get("continuity_correction", c.continuity_correction);
    }
    if (c.models.empty()) throw ConfigError("config: at least one model must be enabled");
    if (c.test_periods.empty()) throw ConfigError("config: split.test_periods is empty");
    training::validate(c.train);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

std::string config_hash(const RunConfig& c) {
    const std::string text = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hypobench::cli
