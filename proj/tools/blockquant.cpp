// blockquant: command-line surface over the block-format error toolkit.
// Every run writes its plot-ready CSV plus a JSON manifest sufficient to
// reproduce the output bit for bit.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockquant/block_format.hpp"
#include "blockquant/bounds.hpp"
#include "blockquant/extreme_values.hpp"
#include "blockquant/monte_carlo.hpp"
#include "blockquant/rebac.hpp"
#include "blockquant/tensor_io.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

using json = nlohmann::json;

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checksum: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (is.read(buf, sizeof buf) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (is.eof()) break;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << v;
    return ss.str();
}

void write_manifest(const std::string& command, const json& params, std::uint64_t seed,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["parameters"] = params;
    m["seed"] = seed;
    m["tool_version"] = kVersion;
    m["outputs"] = json::array();
    for (const auto& path : outputs)
        m["outputs"].push_back({{"path", path}, {"fnv1a64", hex64(fnv1a64_file(path))}});
    const std::string manifest_path = outputs.front() + ".manifest.json";
    std::ofstream os(manifest_path);
    if (!os) throw std::runtime_error("cannot write " + manifest_path);
    os << m.dump(2) << '\n';
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.precision(12);
    return os;
}

blockquant::ScaleKind parse_kind(const std::string& s) {
    if (s == "sbfp") return blockquant::ScaleKind::SBFP;
    if (s == "bfp") return blockquant::ScaleKind::BFP;
    throw CLI::ValidationError("--format", "must be sbfp or bfp");
}

blockquant::TensorFileFormat parse_tensor_format(const std::string& s) {
    if (s == "rawbin") return blockquant::TensorFileFormat::Rawbin;
    if (s == "csv") return blockquant::TensorFileFormat::Csv;
    throw CLI::ValidationError("tensor format", "must be rawbin or csv");
}

double maybe_db(double v, bool db) { return db ? 10.0 * std::log10(v) : v; }

}  // namespace

int main(int argc, char** argv) {
    using namespace blockquant;
    CLI::App app{"Block floating-point quantization and error-analysis toolkit"};
    app.require_subcommand(1);

    // ---- quantize ----
    auto* cmd_q = app.add_subcommand("quantize", "Round-trip a tensor through a block codec");
    std::string q_format = "sbfp", q_in, q_out, q_in_fmt = "rawbin", q_out_fmt = "rawbin";
    int q_p = 4, q_n = 64;
    cmd_q->add_option("--format", q_format, "sbfp|bfp");
    cmd_q->add_option("--precision", q_p, "mantissa bits incl. sign")->required();
    cmd_q->add_option("--block-size", q_n, "block size n")->required();
    cmd_q->add_option("--input", q_in)->required();
    cmd_q->add_option("--output", q_out)->required();
    cmd_q->add_option("--input-format", q_in_fmt, "rawbin|csv");
    cmd_q->add_option("--output-format", q_out_fmt, "rawbin|csv");

    // ---- bounds ----
    auto* cmd_b = app.add_subcommand("bounds", "Evaluate variance bounds over block sizes");
    std::string b_regime = "asymptotic", b_format = "sbfp", b_out = "bounds.csv";
    int b_p = 4, b_p2 = -1;
    double b_sigma = 1.0;
    std::vector<int> b_ns;
    bool b_norm = false, b_db = false;
    cmd_b->add_option("--regime", b_regime, "asymptotic|highdim");
    cmd_b->add_option("--format", b_format, "sbfp|bfp");
    cmd_b->add_option("--precision", b_p)->required();
    cmd_b->add_option("--precision2", b_p2, "second operand precision (defaults to --precision)");
    cmd_b->add_option("--sigma", b_sigma);
    cmd_b->add_option("--block-sizes", b_ns)->required()->delimiter(',');
    cmd_b->add_flag("--normalized", b_norm, "divide by n");
    cmd_b->add_flag("--db", b_db, "report 10*log10(value)");
    cmd_b->add_option("--output", b_out);

    // ---- simulate ----
    auto* cmd_s = app.add_subcommand("simulate", "Monte Carlo inner-product error variance");
    std::string s_format = "sbfp", s_out = "simulate.csv";
    int s_p = 4, s_p2 = -1;
    double s_sigma = 1.0;
    std::vector<int> s_ns;
    std::uint64_t s_trials = 100000, s_seed = 0;
    bool s_norm = false, s_db = false;
    cmd_s->add_option("--format", s_format, "sbfp|bfp");
    cmd_s->add_option("--precision", s_p)->required();
    cmd_s->add_option("--precision2", s_p2);
    cmd_s->add_option("--sigma", s_sigma);
    cmd_s->add_option("--block-sizes", s_ns)->required()->delimiter(',');
    cmd_s->add_option("--trials", s_trials);
    cmd_s->add_option("--seed", s_seed);
    cmd_s->add_flag("--normalized", s_norm);
    cmd_s->add_flag("--db", s_db);
    cmd_s->add_option("--output", s_out);

    // ---- ribbon ----
    auto* cmd_r = app.add_subcommand("ribbon", "Mean and sd of Y_n/alpha per block size");
    std::string r_out = "ribbon.csv";
    int r_p = 4;
    double r_sigma = 1.0;
    std::vector<int> r_ns;
    bool r_asym = false;
    cmd_r->add_option("--precision", r_p)->required();
    cmd_r->add_option("--sigma", r_sigma);
    cmd_r->add_option("--block-sizes", r_ns)->required()->delimiter(',');
    cmd_r->add_flag("--asymptotic", r_asym, "Gumbel closed-form moments instead of quadrature");
    cmd_r->add_option("--output", r_out);

    // ---- rebac ----
    auto* cmd_c = app.add_subcommand("rebac", "BFP/SBFP variance ratio and optimal block size");
    std::string c_mode = "theoretical", c_out = "rebac.csv";
    int c_p = 4;
    double c_sigma = 1.0;
    std::vector<int> c_ns;
    std::uint64_t c_trials = 100000, c_seed = 0;
    cmd_c->add_option("--precision", c_p)->required();
    cmd_c->add_option("--sigma", c_sigma);
    cmd_c->add_option("--block-sizes", c_ns)->required()->delimiter(',');
    cmd_c->add_option("--mode", c_mode, "theoretical|empirical");
    cmd_c->add_option("--trials", c_trials);
    cmd_c->add_option("--seed", c_seed);
    cmd_c->add_option("--output", c_out);

    // ---- analyze ----
    auto* cmd_a = app.add_subcommand("analyze", "Layer-pair inner-product error vs bounds");
    std::string a_wa, a_wb, a_fmt = "rawbin", a_out = "analyze.csv";
    int a_p = 4;
    std::vector<int> a_ns;
    bool a_center = false;
    cmd_a->add_option("--weights-a", a_wa)->required();
    cmd_a->add_option("--weights-b", a_wb)->required();
    cmd_a->add_option("--precision", a_p)->required();
    cmd_a->add_option("--block-sizes", a_ns)->required()->delimiter(',');
    cmd_a->add_option("--tensor-format", a_fmt, "rawbin|csv");
    cmd_a->add_flag("--center", a_center, "subtract each tensor's mean first");
    cmd_a->add_option("--output", a_out);

    // ---- synth ----
    auto* cmd_g = app.add_subcommand("synth", "Generate a synthetic Gaussian weight tensor");
    std::string g_out, g_fmt = "rawbin";
    std::size_t g_rows = 1600, g_cols = 6400;
    double g_sigma = 0.02;
    std::uint64_t g_seed = 0;
    cmd_g->add_option("--rows", g_rows);
    cmd_g->add_option("--cols", g_cols);
    cmd_g->add_option("--sigma", g_sigma);
    cmd_g->add_option("--seed", g_seed);
    cmd_g->add_option("--format", g_fmt, "rawbin|csv");
    cmd_g->add_option("--output", g_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*cmd_q) {
            const ScaleKind kind = parse_kind(q_format);
            WeightTensor t = load_tensor(q_in, parse_tensor_format(q_in_fmt));
            std::vector<double> vals(t.values.begin(), t.values.end());
            const Axis axis = t.cols >= t.rows ? Axis::Cols : Axis::Rows;
            BlockFormatSpec spec{kind, q_n, q_p};
            const QuantizedTensor qt = quantize_tensor(vals, t.rows, t.cols, axis, spec);
            const std::vector<double> back = dequantize_tensor(qt);
            double max_err = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const double e = vals[i] - back[i];
                max_err = std::max(max_err, std::fabs(e));
                sq += e * e;
            }
            WeightTensor out = t;
            out.name = q_out;
            for (std::size_t i = 0; i < back.size(); ++i)
                out.values[i] = static_cast<float>(back[i]);
            save_tensor(out, q_out, parse_tensor_format(q_out_fmt));
            std::cout.precision(12);
            std::cout << "elements," << vals.size() << "\nmax_abs_error," << max_err
                      << "\nrms_error," << std::sqrt(sq / vals.size()) << '\n';
            write_manifest("quantize",
                           {{"format", q_format}, {"precision", q_p}, {"block_size", q_n},
                            {"input", q_in}, {"input_format", q_in_fmt},
                            {"output_format", q_out_fmt}},
                           0, {q_out});
        } else if (*cmd_b) {
            if (b_p2 < 0) b_p2 = b_p;
            BoundQuery query;
            query.kind = parse_kind(b_format);
            if (b_regime == "asymptotic") query.regime = BoundRegime::Asymptotic;
            else if (b_regime == "highdim") query.regime = BoundRegime::HighDimensional;
            else throw CLI::ValidationError("--regime", "must be asymptotic or highdim");
            if (query.kind == ScaleKind::BFP && query.regime == BoundRegime::Asymptotic &&
                b_p != b_p2) {
                std::cerr << "error: asymptotic BFP bound requires equal precisions\n";
                return kExitUsage;
            }
            query.p1 = b_p;
            query.p2 = b_p2;
            query.sigma = b_sigma;
            query.normalized = b_norm;
            const BoundCurve curve = bound_curve(query, b_ns);
            auto os = open_csv(b_out);
            os << "n,bound\n";
            for (const auto& [n, v] : curve.rows) os << n << ',' << maybe_db(v, b_db) << '\n';
            os.close();
            write_manifest("bounds",
                           {{"regime", b_regime}, {"format", b_format}, {"precision", b_p},
                            {"precision2", b_p2}, {"sigma", b_sigma}, {"block_sizes", b_ns},
                            {"normalized", b_norm}, {"db", b_db}},
                           0, {b_out});
        } else if (*cmd_s) {
            if (s_p2 < 0) s_p2 = s_p;
            const ScaleKind kind = parse_kind(s_format);
            auto os = open_csv(s_out);
            os << "n,variance,stderr\n";
            for (int n : s_ns) {
                SimulationConfig cfg;
                cfg.kind = kind;
                cfg.p1 = s_p;
                cfg.p2 = s_p2;
                cfg.n = n;
                cfg.sigma = s_sigma;
                cfg.trials = s_trials;
                cfg.seed = mix64(mix64(s_seed, static_cast<std::uint64_t>(kind == ScaleKind::BFP)),
                                 mix64(static_cast<std::uint64_t>(s_p),
                                       static_cast<std::uint64_t>(n)));
                ErrorStats st = simulate_error(cfg);
                const double div = s_norm ? n : 1.0;
                os << n << ',' << maybe_db(st.variance / div, s_db) << ','
                   << st.std_error_of_variance / div << '\n';
            }
            os.close();
            write_manifest("simulate",
                           {{"format", s_format}, {"precision", s_p}, {"precision2", s_p2},
                            {"sigma", s_sigma}, {"block_sizes", s_ns}, {"trials", s_trials},
                            {"normalized", s_norm}, {"db", s_db}},
                           s_seed, {s_out});
        } else if (*cmd_r) {
            const auto rows = ribbon(r_ns, r_p, r_sigma, r_asym);
            auto os = open_csv(r_out);
            os << "n,mean,sd\n";
            for (const auto& row : rows)
                os << row.n << ',' << row.mean << ',' << row.sd << '\n';
            os.close();
            write_manifest("ribbon",
                           {{"precision", r_p}, {"sigma", r_sigma}, {"block_sizes", r_ns},
                            {"asymptotic", r_asym}},
                           0, {r_out});
        } else if (*cmd_c) {
            RebacMode mode;
            if (c_mode == "theoretical") mode = RebacMode::Theoretical;
            else if (c_mode == "empirical") mode = RebacMode::Empirical;
            else throw CLI::ValidationError("--mode", "must be theoretical or empirical");
            const RebacCurve curve = rebac_curve(c_ns, c_p, c_sigma, mode, c_trials, c_seed);
            auto os = open_csv(c_out);
            os << "n,rho\n";
            for (const auto& [n, rho] : curve.rows) os << n << ',' << rho << '\n';
            os << "# argmin_n = " << curve.argmin_n << '\n';
            os.close();
            std::cout << "argmin_n," << curve.argmin_n << '\n';
            write_manifest("rebac",
                           {{"precision", c_p}, {"sigma", c_sigma}, {"block_sizes", c_ns},
                            {"mode", c_mode}, {"trials", c_trials}},
                           c_seed, {c_out});
        } else if (*cmd_a) {
            const TensorFileFormat fmt = parse_tensor_format(a_fmt);
            const WeightTensor wa = load_tensor(a_wa, fmt);
            const WeightTensor wb = load_tensor(a_wb, fmt);
            auto os = open_csv(a_out);
            os << "layer,n,p,samples,sigma_hat,var_sbfp,var_bfp,stderr_sbfp,stderr_bfp,"
                  "bound_sbfp,bound_bfp\n";
            for (int n : a_ns) {
                const LayerPairReport r = analyze_layer_pair(wa, wb, n, a_p, a_center);
                os << r.layer_id << ',' << r.n << ',' << r.p << ',' << r.sample_count << ','
                   << r.sigma_hat << ',' << r.var_sbfp << ',' << r.var_bfp << ','
                   << r.std_error_sbfp << ',' << r.std_error_bfp << ',' << r.bound_sbfp << ','
                   << r.bound_bfp << '\n';
            }
            os.close();
            write_manifest("analyze",
                           {{"weights_a", a_wa}, {"weights_b", a_wb}, {"precision", a_p},
                            {"block_sizes", a_ns}, {"center", a_center},
                            {"tensor_format", a_fmt}},
                           0, {a_out});
        } else if (*cmd_g) {
            const WeightTensor t = make_gaussian_tensor(g_out, g_rows, g_cols, g_sigma, g_seed);
            save_tensor(t, g_out, parse_tensor_format(g_fmt));
            write_manifest("synth",
                           {{"rows", g_rows}, {"cols", g_cols}, {"sigma", g_sigma},
                            {"format", g_fmt}},
                           g_seed, {g_out});
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
