#include "geolab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace geolab::harness {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "experiment", "n", "seeds", "output_dir", "workers",
        "dist.kind", "dist.d", "dist.alpha", "dist.m", "dist.J", "dist.subspace_seed",
        "dist.affine_offsets", "dist.mix_probs",
        "teacher.kind", "teacher.noise_sigma", "teacher.relu_width", "teacher.seed",
        "net.width", "net.init_scale", "net.has_output_bias",
        "train.eta", "train.epochs", "train.clip_norm", "train.eval_every",
        "train.lambda_max_every",
        "sweep.n_values", "sweep.alpha_values", "sweep.d_values", "sweep.eps_values",
        "csv.path", "csv.label_column", "csv.normalize_scale",
        "stub.exponent", "stub.coefficient",
        "mc.samples", "mc.trials", "mc.probes", "depth.directions",
    };
    return keys;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SpecError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw SpecError("config line " + std::to_string(lineno) + ": empty key");
        if (cfg.values_.count(key))
            throw SpecError("config: duplicate key '" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValueConfig::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw SpecError("config: key '" + key + "' is not a number: " + it->second);
    }
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
    const double v = get_double(key, double(fallback));
    const long r = static_cast<long>(v);
    if (double(r) != v) throw SpecError("config: key '" + key + "' is not an integer");
    return r;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw SpecError("config: key '" + key + "' is not a boolean: " + it->second);
}

std::vector<double> KeyValueConfig::get_list(const std::string& key,
                                             std::vector<double> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(cell, &pos));
            if (pos != cell.size()) throw std::invalid_argument("");
        } catch (...) {
            throw SpecError("config: list key '" + key + "' has non-numeric entry: " + cell);
        }
    }
    if (out.empty()) throw SpecError("config: list key '" + key + "' is empty");
    return out;
}

void KeyValueConfig::require_known_keys(const std::vector<std::string>& known) const {
    for (const auto& [key, value] : values_) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            std::string msg = "config: unknown key '" + key + "'. Known keys:";
            for (const auto& k : known) msg += " " + k;
            throw SpecError(msg);
        }
    }
}

std::string KeyValueConfig::canonical() const {
    std::string out;
    for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
    return out;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string content_hash(const std::string& canonical_config) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(std::string(kVersionTag) + "\n" + canonical_config)));
    return buf;
}

void ExperimentConfig::finalize() {
    std::ostringstream echo;
    echo << "experiment = " << experiment << "\n";
    echo << "dist.kind = " << static_cast<int>(dist.kind) << "\n";
    echo << "dist.d = " << dist.d << "\n";
    echo << "dist.alpha = " << dist.alpha << "\n";
    echo << "dist.m = " << dist.m << "\n";
    echo << "dist.J = " << dist.J << "\n";
    echo << "dist.subspace_seed = " << dist.subspace_seed << "\n";
    echo << "dist.affine_offsets = " << dist.affine_offsets << "\n";
    echo << "teacher.kind = " << teacher_kind << "\n";
    echo << "teacher.noise_sigma = " << noise_sigma << "\n";
    echo << "teacher.relu_width = " << teacher_relu_width << "\n";
    echo << "teacher.seed = " << teacher_seed << "\n";
    echo << "net.width = " << width << "\n";
    echo << "net.init_scale = " << init_scale << "\n";
    echo << "net.has_output_bias = " << has_output_bias << "\n";
    echo << "train.eta = " << train.eta << "\n";
    echo << "train.epochs = " << train.epochs << "\n";
    echo << "train.clip_norm = " << (train.clip_norm ? *train.clip_norm : 0.0) << "\n";
    echo << "train.eval_every = " << train.eval_every << "\n";
    echo << "train.lambda_max_every = "
         << (train.lambda_max_every ? *train.lambda_max_every : 0) << "\n";
    const auto emit_list = [&echo](const char* name, const auto& xs) {
        echo << name << " =";
        for (const auto& x : xs) echo << " " << x;
        echo << "\n";
    };
    emit_list("sweep.n_values", n_values);
    emit_list("sweep.alpha_values", alpha_values);
    emit_list("sweep.d_values", d_values);
    emit_list("sweep.eps_values", eps_values);
    echo << "n = " << n << "\n";
    emit_list("seeds", seeds);
    echo << "csv.path = " << csv_path << "\n";
    echo << "csv.label_column = " << csv_label_column << "\n";
    echo << "csv.normalize_scale = "
         << (csv_normalize_scale ? *csv_normalize_scale : 1.0) << "\n";
    echo << "stub.exponent = " << (stub_exponent ? *stub_exponent : 0.0) << "\n";
    echo << "stub.coefficient = " << stub_coefficient << "\n";
    echo << "mc.samples = " << mc_samples << "\n";
    echo << "mc.trials = " << mc_trials << "\n";
    echo << "mc.probes = " << mc_probes << "\n";
    echo << "depth.directions = " << depth_directions << "\n";
    config_echo = echo.str();
    hash = content_hash(config_echo);
}

ExperimentConfig config_from_kv(const KeyValueConfig& kv) {
    kv.require_known_keys(known_keys());
    if (!kv.has("experiment")) throw SpecError("config: missing 'experiment'");
    ExperimentConfig cfg = default_config(kv.get_str("experiment", ""));

    const std::string kind = kv.get_str("dist.kind", "");
    if (!kind.empty()) {
        if (kind == "beta_radial")
            cfg.dist.kind = data::DistSpec::Kind::BetaRadial;
        else if (kind == "mixture_balls")
            cfg.dist.kind = data::DistSpec::Kind::MixtureBalls;
        else if (kind == "sphere")
            cfg.dist.kind = data::DistSpec::Kind::Sphere;
        else if (kind == "ball")
            cfg.dist.kind = data::DistSpec::Kind::Ball;
        else if (kind == "gaussian")
            cfg.dist.kind = data::DistSpec::Kind::Gaussian;
        else
            throw SpecError("config: unknown dist.kind '" + kind + "'");
    }
    cfg.dist.d = static_cast<int>(kv.get_int("dist.d", cfg.dist.d));
    cfg.dist.alpha = kv.get_double("dist.alpha", cfg.dist.alpha);
    cfg.dist.m = static_cast<int>(kv.get_int("dist.m", cfg.dist.m));
    cfg.dist.J = static_cast<int>(kv.get_int("dist.J", cfg.dist.J));
    cfg.dist.subspace_seed = kv.get_int("dist.subspace_seed", cfg.dist.subspace_seed);
    cfg.dist.affine_offsets = kv.get_bool("dist.affine_offsets", cfg.dist.affine_offsets);
    if (kv.has("dist.mix_probs")) cfg.dist.mix_probs = kv.get_list("dist.mix_probs", {});

    cfg.teacher_kind = kv.get_str("teacher.kind", cfg.teacher_kind);
    if (cfg.teacher_kind != "quadratic" && cfg.teacher_kind != "relu")
        throw SpecError("config: teacher.kind must be quadratic or relu");
    cfg.noise_sigma = kv.get_double("teacher.noise_sigma", cfg.noise_sigma);
    cfg.teacher_relu_width =
        static_cast<int>(kv.get_int("teacher.relu_width", cfg.teacher_relu_width));
    cfg.teacher_seed = kv.get_int("teacher.seed", cfg.teacher_seed);

    cfg.width = static_cast<int>(kv.get_int("net.width", cfg.width));
    cfg.init_scale = kv.get_double("net.init_scale", cfg.init_scale);
    cfg.has_output_bias = kv.get_bool("net.has_output_bias", cfg.has_output_bias);

    cfg.train.eta = kv.get_double("train.eta", cfg.train.eta);
    cfg.train.epochs = static_cast<int>(kv.get_int("train.epochs", cfg.train.epochs));
    if (kv.has("train.clip_norm")) {
        const double clip = kv.get_double("train.clip_norm", 0.0);
        cfg.train.clip_norm = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
    }
    cfg.train.eval_every = static_cast<int>(kv.get_int("train.eval_every", cfg.train.eval_every));
    if (kv.has("train.lambda_max_every")) {
        const long every = kv.get_int("train.lambda_max_every", 0);
        cfg.train.lambda_max_every =
            every > 0 ? std::optional<int>(static_cast<int>(every)) : std::nullopt;
    }

    const auto to_ints = [](const std::vector<double>& xs) {
        std::vector<int> out;
        for (double x : xs) out.push_back(static_cast<int>(x));
        return out;
    };
    if (kv.has("sweep.n_values")) cfg.n_values = to_ints(kv.get_list("sweep.n_values", {}));
    if (kv.has("sweep.alpha_values")) cfg.alpha_values = kv.get_list("sweep.alpha_values", {});
    if (kv.has("sweep.d_values")) cfg.d_values = to_ints(kv.get_list("sweep.d_values", {}));
    if (kv.has("sweep.eps_values")) cfg.eps_values = kv.get_list("sweep.eps_values", {});
    cfg.n = static_cast<int>(kv.get_int("n", cfg.n));

    if (kv.has("seeds")) {
        cfg.seeds.clear();
        for (double s : kv.get_list("seeds", {}))
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        std::vector<std::uint64_t> sorted = cfg.seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw SpecError("config: seeds must be distinct");
    }
    cfg.output_dir = kv.get_str("output_dir", cfg.output_dir);
    cfg.workers = static_cast<int>(kv.get_int("workers", cfg.workers));

    cfg.csv_path = kv.get_str("csv.path", cfg.csv_path);
    cfg.csv_label_column = static_cast<int>(kv.get_int("csv.label_column", cfg.csv_label_column));
    if (kv.has("csv.normalize_scale"))
        cfg.csv_normalize_scale = kv.get_double("csv.normalize_scale", 1.0);

    if (kv.has("stub.exponent")) cfg.stub_exponent = kv.get_double("stub.exponent", 0.0);
    cfg.stub_coefficient = kv.get_double("stub.coefficient", cfg.stub_coefficient);

    cfg.mc_samples = static_cast<int>(kv.get_int("mc.samples", cfg.mc_samples));
    cfg.mc_trials = static_cast<int>(kv.get_int("mc.trials", cfg.mc_trials));
    cfg.mc_probes = static_cast<int>(kv.get_int("mc.probes", cfg.mc_probes));
    cfg.depth_directions =
        static_cast<int>(kv.get_int("depth.directions", cfg.depth_directions));

    cfg.finalize();
    return cfg;
}

bool ExperimentResult::all_pass() const {
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return true;
}

void persist_result(ExperimentResult& result, const std::string& output_dir) {
    const fs::path root =
        fs::path(output_dir) / (result.experiment + "-" + result.hash.substr(0, 8));
    fs::create_directories(root / "tables");

    nlohmann::json manifest;
    manifest["experiment"] = result.experiment;
    manifest["hash"] = result.hash;
    manifest["version"] = result.version;
    manifest["wall_time_s"] = result.wall_time_s;
    manifest["config"] = result.config_echo;
    std::ofstream mf(root / "manifest.json");
    if (!mf) throw IngestionError("persist_result: cannot write manifest");
    mf << manifest.dump(2) << "\n";

    for (const auto& [name, csv] : result.tables) {
        std::ofstream tf(root / "tables" / (name + ".csv"));
        tf << csv;
    }

    nlohmann::json fits;
    for (const auto& [name, fit] : result.fits)
        fits[name] = {{"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"r2", fit.r2},
                      {"stderr", fit.stderr_slope}};
    std::ofstream ff(root / "fits.json");
    ff << fits.dump(2) << "\n";

    nlohmann::json verdicts = nlohmann::json::array();
    for (const auto& v : result.verdicts)
        verdicts.push_back({{"name", v.name},
                            {"pass", v.pass},
                            {"margin", v.margin},
                            {"details", v.details},
                            {"criterion", v.criterion},
                            {"table", v.table}});
    std::ofstream vf(root / "verdicts.json");
    vf << verdicts.dump(2) << "\n";

    result.output_root = root.string();
}

ExperimentResult load_result(const std::string& result_dir) {
    const fs::path root(result_dir);
    std::ifstream mf(root / "manifest.json");
    if (!mf) throw IngestionError("load_result: no manifest.json under " + result_dir);
    nlohmann::json manifest;
    mf >> manifest;

    ExperimentResult result;
    result.experiment = manifest.at("experiment").get<std::string>();
    result.hash = manifest.at("hash").get<std::string>();
    result.version = manifest.at("version").get<std::string>();
    result.wall_time_s = manifest.at("wall_time_s").get<double>();
    result.config_echo = manifest.at("config").get<std::string>();
    result.output_root = root.string();

    if (fs::exists(root / "tables")) {
        for (const auto& entry : fs::directory_iterator(root / "tables")) {
            if (entry.path().extension() != ".csv") continue;
            std::ifstream tf(entry.path());
            std::stringstream buf;
            buf << tf.rdbuf();
            result.tables[entry.path().stem().string()] = buf.str();
        }
    }
    if (fs::exists(root / "fits.json")) {
        std::ifstream ff(root / "fits.json");
        nlohmann::json fits;
        ff >> fits;
        for (const auto& [name, j] : fits.items()) {
            numerics::SlopeFit fit;
            fit.slope = j.at("slope").get<double>();
            fit.intercept = j.at("intercept").get<double>();
            fit.r2 = j.at("r2").get<double>();
            fit.stderr_slope = j.at("stderr").get<double>();
            result.fits[name] = fit;
        }
    }
    if (fs::exists(root / "verdicts.json")) {
        std::ifstream vf(root / "verdicts.json");
        nlohmann::json verdicts;
        vf >> verdicts;
        for (const auto& j : verdicts) {
            Verdict v;
            v.name = j.at("name").get<std::string>();
            v.pass = j.at("pass").get<bool>();
            v.margin = j.at("margin").get<double>();
            v.details = j.at("details").get<std::string>();
            v.criterion = j.at("criterion").get<int>();
            v.table = j.at("table").get<std::string>();
            result.verdicts.push_back(v);
        }
    }
    return result;
}

int default_workers() {
    if (const char* env = std::getenv("GEOLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 2;
}

void parallel_for(int count, int workers, const std::function<void(int)>& job) {
    if (count <= 0) return;
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (;;) {
                    const int i = next.fetch_add(1);
                    if (i >= count) break;
                    job(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
                next.store(count);  // drain remaining work
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace geolab::harness
