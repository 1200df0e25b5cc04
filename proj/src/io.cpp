#include "sbbd/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sbbd {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr const char *kEncoding = "f64le-base64";

using Json = nlohmann::ordered_json;

const Json &field(const Json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field: ") + key);
    return j.at(key);
}

template <class T>
T get(const Json &j, const char *key) {
    try {
        return field(j, key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("bad field ") + key + ": " + e.what());
    }
}

Json rows_to_json(const std::vector<LinearRow> &rows) {
    Json out = Json::array();
    for (const auto &r : rows) out.push_back({{"coeffs", r.coeffs}, {"rhs", r.rhs}});
    return out;
}

std::vector<LinearRow> rows_from_json(const Json &j) {
    if (!j.is_array()) throw FormatError("constraint rows must be an array");
    std::vector<LinearRow> out;
    for (const auto &r : j) out.push_back({get<std::vector<double>>(r, "coeffs"), get<double>(r, "rhs")});
    return out;
}

Json matrix_rows(const std::vector<double> &v, std::size_t n, std::size_t m) {
    Json out = Json::array();
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::vector<double>(v.begin() + i * m, v.begin() + (i + 1) * m));
    return out;
}

std::vector<double> matrix_from_json(const Json &j, std::size_t n, std::size_t m, bool compact) {
    std::vector<double> out;
    if (compact) {
        if (!j.is_string()) throw FormatError("compact matrix must be a base64 string");
        out = decode_f64_base64(j.get<std::string>());
    } else {
        if (!j.is_array() || j.size() != n) throw FormatError("matrix must have one array per scenario");
        out.reserve(n * m);
        for (const auto &row : j) {
            if (!row.is_array() || row.size() != m) throw FormatError("matrix row has the wrong length");
            for (const auto &v : row) {
                if (!v.is_number()) throw FormatError("matrix entries must be numbers");
                out.push_back(v.get<double>());
            }
        }
    }
    if (out.size() != n * m) throw FormatError("matrix size does not match n x m");
    return out;
}

}  // namespace

std::string encode_f64_base64(std::span<const double> values) {
    std::vector<unsigned char> bytes;
    bytes.reserve(values.size() * 8);
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<unsigned char>(bits >> (8 * k)));
    }
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        const std::size_t left = bytes.size() - i;
        std::uint32_t w = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (left > 1) w |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (left > 2) w |= bytes[i + 2];
        out.push_back(kAlphabet[(w >> 18) & 63]);
        out.push_back(kAlphabet[(w >> 12) & 63]);
        out.push_back(left > 1 ? kAlphabet[(w >> 6) & 63] : '=');
        out.push_back(left > 2 ? kAlphabet[w & 63] : '=');
    }
    return out;
}

std::vector<double> decode_f64_base64(const std::string &text) {
    std::array<int, 256> rev;
    rev.fill(-1);
    for (int k = 0; k < 64; ++k) rev[static_cast<unsigned char>(kAlphabet[k])] = k;
    if (text.size() % 4 != 0) throw FormatError("base64 length must be a multiple of 4");
    std::vector<unsigned char> bytes;
    bytes.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::uint32_t w = 0;
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            int v = 0;
            if (c == '=' && k >= 2 && i + 4 == text.size()) {
                ++pad;
            } else {
                if (pad > 0) throw FormatError("invalid base64 padding");
                v = rev[static_cast<unsigned char>(c)];
                if (v < 0) throw FormatError("invalid base64 character");
            }
            w = (w << 6) | static_cast<std::uint32_t>(v);
        }
        bytes.push_back(static_cast<unsigned char>(w >> 16));
        if (pad < 2) bytes.push_back(static_cast<unsigned char>(w >> 8));
        if (pad < 1) bytes.push_back(static_cast<unsigned char>(w));
    }
    if (bytes.size() % 8 != 0) throw FormatError("base64 block is not a whole number of float64 values");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[i * 8 + k]) << (8 * k);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

Json instance_to_json(const Instance &inst, bool compact) {
    Json space;
    space["n_options"] = inst.space.n_options;
    space["ineq"] = rows_to_json(inst.space.ineq);
    space["eq"] = rows_to_json(inst.space.eq);
    space["fixed_ones"] = inst.space.fixed_ones;
    space["app_tag"] = to_string(inst.space.app_tag);
    if (!inst.space.groups.empty()) space["groups"] = inst.space.groups;

    Json sc;
    sc["n"] = inst.scenarios.n;
    sc["m"] = inst.scenarios.m;
    if (compact) {
        sc["encoding"] = kEncoding;
        sc["u"] = encode_f64_base64(inst.scenarios.u);
        sc["r"] = encode_f64_base64(inst.scenarios.r);
    } else {
        sc["u"] = matrix_rows(inst.scenarios.u, inst.scenarios.n, inst.scenarios.m);
        sc["r"] = matrix_rows(inst.scenarios.r, inst.scenarios.n, inst.scenarios.m);
    }

    Json j;
    j["schema"] = kInstanceSchema;
    j["space"] = std::move(space);
    j["scenarios"] = std::move(sc);
    j["provenance"] = inst.provenance;
    return j;
}

Instance instance_from_json(const Json &j) {
    if (get<int>(j, "schema") != kInstanceSchema) throw FormatError("unsupported instance schema");
    const auto &sp = field(j, "space");
    Instance inst;
    inst.space.n_options = get<int>(sp, "n_options");
    inst.space.ineq = rows_from_json(field(sp, "ineq"));
    inst.space.eq = rows_from_json(field(sp, "eq"));
    inst.space.fixed_ones = get<std::vector<int>>(sp, "fixed_ones");
    try {
        inst.space.app_tag = app_tag_from_string(get<std::string>(sp, "app_tag"));
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    if (sp.contains("groups")) inst.space.groups = get<std::vector<std::vector<int>>>(sp, "groups");

    const auto &sc = field(j, "scenarios");
    const auto n = get<std::size_t>(sc, "n");
    const auto m = sc.contains("m") ? get<std::size_t>(sc, "m") : static_cast<std::size_t>(inst.space.n_options);
    bool compact = false;
    if (sc.contains("encoding")) {
        if (get<std::string>(sc, "encoding") != kEncoding) throw FormatError("unknown scenario encoding");
        compact = true;
    }
    inst.scenarios.n = n;
    inst.scenarios.m = m;
    inst.scenarios.u = matrix_from_json(field(sc, "u"), n, m, compact);
    inst.scenarios.r = matrix_from_json(field(sc, "r"), n, m, compact);
    if (j.contains("provenance")) inst.provenance = j.at("provenance");
    try {
        inst.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(std::string("invalid instance: ") + e.what());
    }
    if (!utilities_distinct(inst.scenarios)) throw FormatError("invalid instance: tied utilities within a scenario");
    return inst;
}

void save_instance(const std::filesystem::path &path, const Instance &inst, bool compact) {
    write_json(path, instance_to_json(inst, compact));
}

Instance load_instance(const std::filesystem::path &path) { return instance_from_json(read_json(path)); }

Json to_json(const SolveConfig &cfg) {
    Json j;
    j["method"] = to_string(cfg.method);
    j["time_limit"] = cfg.time_limit;
    j["mrv"] = cfg.mrv;
    j["heuristic_period"] = cfg.heuristic_period;
    j["int_tol"] = cfg.int_tol;
    j["max_root_passes"] = cfg.max_root_passes;
    j["reduced_model"] = cfg.reduced_model;
    j["extensive_cap"] = cfg.extensive_cap;
    j["seed"] = cfg.seed;
    if (cfg.stage1) {
        const auto &s = *cfg.stage1;
        Json st;
        st["rho"] = s.rho;
        st["max_iterations"] = s.max_iterations;
        st["stabilizer"] = {{"enabled", s.stabilizer.enabled},
                            {"center", s.stabilizer.center},
                            {"step0", s.stabilizer.step0},
                            {"step_increment", s.stabilizer.step_increment}};
        j["stage1"] = std::move(st);
    } else {
        j["stage1"] = nullptr;
    }
    return j;
}

SolveConfig solve_config_from_json(const Json &j) {
    SolveConfig cfg;
    try {
        cfg.method = method_from_string(get<std::string>(j, "method"));
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    cfg.time_limit = get<double>(j, "time_limit");
    cfg.mrv = get<double>(j, "mrv");
    cfg.heuristic_period = get<int>(j, "heuristic_period");
    cfg.int_tol = get<double>(j, "int_tol");
    cfg.max_root_passes = get<int>(j, "max_root_passes");
    cfg.reduced_model = get<bool>(j, "reduced_model");
    cfg.extensive_cap = get<std::size_t>(j, "extensive_cap");
    cfg.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("stage1") && !j.at("stage1").is_null()) {
        const auto &st = j.at("stage1");
        Stage1Config s;
        s.rho = get<double>(st, "rho");
        s.max_iterations = get<int>(st, "max_iterations");
        const auto &sb = field(st, "stabilizer");
        s.stabilizer.enabled = get<bool>(sb, "enabled");
        s.stabilizer.center = get<std::vector<double>>(sb, "center");
        s.stabilizer.step0 = get<double>(sb, "step0");
        s.stabilizer.step_increment = get<double>(sb, "step_increment");
        cfg.stage1 = s;
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    return cfg;
}

Json to_json(const RunManifest &m) {
    Json j;
    j["experiment_id"] = m.experiment_id;
    j["command"] = m.command;
    j["app_params"] = m.app_params;
    j["solver"] = m.solver;
    j["outputs"] = m.outputs;
    j["seeds"] = m.seeds;
    j["extra"] = m.extra;
    return j;
}

RunManifest run_manifest_from_json(const Json &j) {
    RunManifest m;
    m.experiment_id = get<std::string>(j, "experiment_id");
    m.command = get<std::string>(j, "command");
    m.app_params = field(j, "app_params");
    m.solver = field(j, "solver");
    m.outputs = get<std::map<std::string, std::string>>(j, "outputs");
    m.seeds = get<std::map<std::string, std::uint64_t>>(j, "seeds");
    if (j.contains("extra")) m.extra = j.at("extra");
    return m;
}

Json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path &path, const Json &j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::filesystem::path &path, const std::string &text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace sbbd
