// ccomm: dance-sequence complexity analysis and energy-optimal message
// encoding through linear control systems.
//
// Exit codes: 0 success, 1 usage, 2 input parse/alignment failure,
// 3 capacity violation, 4 solver failure, 5 verification failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccomm/envelope.hpp"
#include "ccomm/error.hpp"
#include "ccomm/integrator.hpp"
#include "ccomm/seqkit.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ccomm;

enum Exit : int { kOk = 0, kUsage = 1, kInput = 2, kCapacity = 3, kSolver = 4, kVerify = 5 };

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw InvalidArgument(std::string(flag) + ": '" + cell + "' is not a number");
        }
    }
    return out;
}

linalg::Matrix parse_matrix(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(text);
    std::string row;
    while (std::getline(ss, row, ';')) rows.push_back(parse_list(row, "--matrix"));
    if (rows.empty() || rows.front().empty()) throw InvalidArgument("--matrix is empty");
    linalg::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) throw InvalidArgument("--matrix rows differ in length");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

// ---------------------------------------------------------------------------

struct AnalyzeOptions {
    std::string corpus = std::string(CCOMM_DATA_DIR) + "/table1_sequences.txt";
    std::string scores = std::string(CCOMM_DATA_DIR) + "/table2_scores.csv";
    bool no_scores = false;
    std::string output = "-";
    std::string scatter;
    std::string weights = "0.9,0.1";
};

int cmd_analyze(const AnalyzeOptions& o) {
    try {
        const auto corpus = seqkit::read_corpus_file(o.corpus);
        std::optional<seqkit::ScoreTable> scores;
        if (!o.no_scores && !o.scores.empty()) scores = seqkit::read_scores_file(o.scores);
        const auto w = parse_list(o.weights, "--weights");
        if (w.size() != 2) throw InvalidArgument("--weights expects two values");
        const auto report = seqkit::metric_report(corpus, scores, {w[0], w[1]});
        write_text(o.output, seqkit::report_to_json(report));
        if (!o.scatter.empty()) write_text(o.scatter, seqkit::scatter_to_csv(report));
        return kOk;
    } catch (const Error& e) {
        std::cerr << "analyze: " << e.what() << '\n';
        return kInput;
    }
}

struct FitOptions {
    std::string corpus = std::string(CCOMM_DATA_DIR) + "/table1_sequences.txt";
    std::string scores = std::string(CCOMM_DATA_DIR) + "/table2_scores.csv";
};

int cmd_fit(const FitOptions& o) {
    try {
        const auto corpus = seqkit::read_corpus_file(o.corpus);
        const auto scores = seqkit::read_scores_file(o.scores);
        std::vector<seqkit::DanceSequence> seqs;
        std::vector<double> energies;
        for (const auto& seq : corpus) {
            auto it = std::find_if(scores.begin(), scores.end(), [&](const auto& r) { return r.dance == seq.id(); });
            if (it == scores.end()) throw InvalidArgument("no score row for dance '" + seq.id() + "'");
            if (!it->energy_cm) throw InvalidArgument("dance '" + seq.id() + "' has no energy value");
            seqs.push_back(seq);
            energies.push_back(*it->energy_cm);
        }
        const auto fit = seqkit::fit_step_costs(seqs, energies);
        nlohmann::json j;
        j["step_cost_cm"] = {{"A", fit.model.step_cost[0]},
                             {"B", fit.model.step_cost[1]},
                             {"C", fit.model.step_cost[2]},
                             {"D", fit.model.step_cost[3]}};
        j["rms_residual_cm"] = fit.rms_residual;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < seqs.size(); ++i)
            rows.push_back({{"dance", seqs[i].id()},
                            {"measured_cm", energies[i]},
                            {"predicted_cm", seqkit::total_energy(seqs[i], fit.model)}});
        j["dances"] = std::move(rows);
        std::cout << j.dump(2) << '\n';
        return kOk;
    } catch (const Error& e) {
        std::cerr << "fit: " << e.what() << '\n';
        return kInput;
    }
}

struct EncodeOptions {
    std::string mode = "integrator";
    int n = 1;
    int degree = 2;
    int messages = 2;
    double epsilon = 0.1;
    std::string terminal = "1";
    std::string matrix;
    std::string target;
    int starts = 32;
    std::uint64_t seed = 1;
    double tol = 1e-8;
    std::string metric = "R-form";
    std::string format = "json";
    std::string output = "-";
    bool inequality = false;
    int threads = 1;
    int samples = 101;
};

int cmd_encode(const EncodeOptions& o) {
    cli::SolveRequest req;
    try {
        req.mode = o.mode == "identity" ? cli::Mode::Identity : cli::Mode::Integrator;
        req.messages = o.messages;
        req.epsilon = o.epsilon;
        req.config.restarts = o.starts;
        req.config.seed = o.seed;
        req.config.tolerance = o.tol;
        req.config.inequality = o.inequality;
        req.config.threads = o.threads;
        req.trajectory_samples = o.samples;
        if (req.mode == cli::Mode::Integrator) {
            req.order = o.n;
            req.degree = o.degree;
            req.terminal = parse_list(o.terminal, "--terminal");
            req.metric = encoder::separation_metric_from_string(o.metric);
        } else {
            if (o.matrix.empty() || o.target.empty())
                throw InvalidArgument("identity mode needs --matrix and --target");
            req.L = parse_matrix(o.matrix);
            req.target = parse_list(o.target, "--target");
        }
        req.validate();
    } catch (const CapacityError& e) {
        std::cerr << "encode: " << e.what() << '\n';
        return kCapacity;
    } catch (const Error& e) {
        std::cerr << "encode: " << e.what() << '\n';
        return kInput;
    }

    nlohmann::json env;
    try {
        env = cli::encode(req);
    } catch (const CapacityError& e) {
        std::cerr << "encode: " << e.what() << '\n';
        return kCapacity;
    } catch (const Error& e) {
        std::cerr << "encode: solver failure: " << e.what() << '\n';
        return kSolver;
    }

    write_text(o.output, env.dump(2) + "\n");
    if (o.format == "csv" && req.mode == cli::Mode::Integrator) {
        if (o.output.empty() || o.output == "-") {
            std::cerr << "encode: --format csv needs --output to name the trajectory files\n";
            return kUsage;
        }
        const fs::path base(o.output);
        for (std::size_t j = 0; j < env["controls"].size(); ++j) {
            integrator::PolynomialControl a{cli::vector_from_json(env["controls"][j])};
            const auto tr = integrator::simulate(a, req.order, req.trajectory_samples);
            const fs::path csv = base.parent_path() / (base.stem().string() + "_msg" + std::to_string(j) + ".csv");
            write_text(csv.string(), integrator::trajectory_csv(tr));
        }
    }
    return kOk;
}

int cmd_verify(const std::string& path) {
    nlohmann::json env;
    try {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open '" + path + "'");
        env = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        std::cerr << "verify: " << e.what() << '\n';
        return kInput;
    }
    cli::VerifyReport report;
    try {
        report = cli::verify(env);
    } catch (const std::exception& e) {
        std::cerr << "verify: malformed envelope: " << e.what() << '\n';
        return kVerify;
    }
    std::cout << "endpoint residual " << report.max_endpoint_residual << ", separation error "
              << report.max_separation_error << ", cost identity error " << report.cost_identity_error << '\n';
    if (!report.ok) {
        for (const auto& f : report.failures) std::cerr << "FAILED: " << f << '\n';
        return kVerify;
    }
    std::cout << "OK\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dance complexity metrics and energy-optimal message encoding"};
    app.require_subcommand(1);

    AnalyzeOptions ao;
    auto* analyze = app.add_subcommand("analyze", "Compute complexity metrics and correlations for a corpus");
    analyze->add_option("--corpus", ao.corpus, "Sequence corpus (one per line, optional 'name:' prefix)");
    analyze->add_option("--scores", ao.scores, "CSV with header dance,mean_score,std,energy_cm");
    analyze->add_flag("--no-scores", ao.no_scores, "Report metrics only");
    analyze->add_option("--output,-o", ao.output, "JSON report path ('-' for stdout)");
    analyze->add_option("--scatter", ao.scatter, "Scatter-data CSV path");
    analyze->add_option("--weights", ao.weights, "Averaged/number-of-phrases weights, e.g. 0.9,0.1");

    FitOptions fo;
    auto* fit = app.add_subcommand("fit", "Fit per-step energy costs to the measured energies");
    fit->add_option("--corpus", fo.corpus, "Sequence corpus");
    fit->add_option("--scores", fo.scores, "Scores/energies CSV");

    EncodeOptions eo;
    auto* enc = app.add_subcommand("encode", "Solve an energy-optimal message encoding problem");
    enc->add_option("--mode", eo.mode, "identity | integrator")->check(CLI::IsMember({"identity", "integrator"}));
    enc->add_option("--n", eo.n, "Integrator order");
    enc->add_option("--degree", eo.degree, "Polynomial degree N of the controls");
    enc->add_option("--messages", eo.messages, "Number of messages m");
    enc->add_option("--epsilon", eo.epsilon, "Separation");
    enc->add_option("--terminal", eo.terminal, "Terminal state x(1),x'(1),... (comma separated)");
    enc->add_option("--matrix", eo.matrix, "Identity mode: L as rows 'a,b,c;d,e,f'");
    enc->add_option("--target", eo.target, "Identity mode: right-hand side x");
    enc->add_option("--starts", eo.starts, "Solver restarts");
    enc->add_option("--seed", eo.seed, "Random seed");
    enc->add_option("--tol", eo.tol, "Relative separation tolerance");
    enc->add_option("--separation-metric", eo.metric, "R-form | output-L2")
        ->check(CLI::IsMember({"R-form", "output-L2"}));
    enc->add_option("--format", eo.format, "json | csv (csv also writes per-message trajectory files)")
        ->check(CLI::IsMember({"json", "csv"}));
    enc->add_option("--output,-o", eo.output, "Envelope path ('-' for stdout)");
    enc->add_flag("--inequality", eo.inequality, "Require separation >= epsilon instead of equality");
    enc->add_option("--threads", eo.threads, "Threads for solver restarts");
    enc->add_option("--samples", eo.samples, "Trajectory samples per control");

    std::string envelope_path;
    auto* ver = app.add_subcommand("verify", "Re-derive every residual of an envelope");
    ver->add_option("envelope", envelope_path, "Envelope JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (*analyze) return cmd_analyze(ao);
    if (*fit) return cmd_fit(fo);
    if (*enc) return cmd_encode(eo);
    if (*ver) return cmd_verify(envelope_path);
    return kUsage;
}
