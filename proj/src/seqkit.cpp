#include "ccomm/seqkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "ccomm/error.hpp"

namespace ccomm::seqkit {

char to_char(Symbol s) { return static_cast<char>('A' + static_cast<int>(s)); }

DanceSequence::DanceSequence(std::vector<Symbol> symbols, std::string id)
    : symbols_(std::move(symbols)), id_(std::move(id)) {}

std::array<std::size_t, kAlphabetSize> DanceSequence::counts() const {
    std::array<std::size_t, kAlphabetSize> c{};
    for (Symbol s : symbols_) ++c[static_cast<std::size_t>(s)];
    return c;
}

std::string DanceSequence::str() const {
    std::string out;
    out.reserve(symbols_.size());
    for (Symbol s : symbols_) out.push_back(to_char(s));
    return out;
}

std::string Phrase::str() const {
    std::string out;
    for (Symbol s : symbols_) out.push_back(to_char(s));
    return out;
}

DanceSequence parse_sequence(std::string_view text, std::string id) {
    std::vector<Symbol> symbols;
    symbols.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto ch = static_cast<unsigned char>(text[i]);
        if (std::isspace(ch)) continue;
        const int up = std::toupper(ch);
        if (up < 'A' || up > 'D') {
            std::ostringstream msg;
            msg << "invalid symbol '" << text[i] << "' at position " << (i + 1);
            throw ParseError(msg.str(), i + 1);
        }
        symbols.push_back(static_cast<Symbol>(up - 'A'));
    }
    if (symbols.empty()) throw ParseError("empty sequence", 0);
    return DanceSequence(std::move(symbols), std::move(id));
}

double entropy_bits(const std::vector<std::size_t>& counts) {
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (total == 0) throw InvalidArgument("entropy of an empty distribution");
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double f = static_cast<double>(c) / static_cast<double>(total);
        h -= f * std::log2(f);
    }
    // A single outcome yields -0.0; report +0.
    return h <= 0.0 ? 0.0 : h;
}

double symbol_frequency_complexity(const DanceSequence& seq) {
    if (seq.empty()) throw InvalidArgument("symbol frequency complexity of an empty sequence");
    const auto c = seq.counts();
    return entropy_bits({c.begin(), c.end()});
}

PhraseDecomposition phrase_decompose(const DanceSequence& seq) {
    PhraseDecomposition out;
    const auto& s = seq.symbols();
    std::size_t i = 0;
    for (; i + kPhraseLength <= s.size(); i += kPhraseLength)
        out.phrases.emplace_back(std::array<Symbol, kPhraseLength>{s[i], s[i + 1], s[i + 2], s[i + 3]});
    out.remainder.assign(s.begin() + static_cast<std::ptrdiff_t>(i), s.end());
    return out;
}

double phrase_complexity(const Phrase& p) {
    std::vector<std::size_t> c(kAlphabetSize, 0);
    for (Symbol s : p.symbols()) ++c[static_cast<std::size_t>(s)];
    return entropy_bits(c);
}

double averaged_phrase_complexity(const DanceSequence& seq) {
    if (seq.size() < kPhraseLength)
        throw InvalidArgument("averaged phrase complexity needs at least one full phrase");
    const auto dec = phrase_decompose(seq);
    double sum = 0.0;
    for (const auto& p : dec.phrases) sum += phrase_complexity(p);
    return sum / static_cast<double>(dec.phrases.size());
}

namespace {

std::map<Phrase, std::size_t> phrase_histogram(const std::vector<Phrase>& phrases) {
    std::map<Phrase, std::size_t> hist;
    for (const auto& p : phrases) ++hist[p];
    return hist;
}

}  // namespace

double number_of_phrases_complexity(const DanceSequence& seq) {
    if (seq.size() < kPhraseWindow) {
        std::ostringstream msg;
        msg << "number-of-phrases complexity needs at least " << kPhraseWindow
            << " symbols, got " << seq.size();
        throw InvalidArgument(msg.str());
    }
    auto dec = phrase_decompose(seq);
    dec.phrases.erase(dec.phrases.begin() + kPhraseWindow / kPhraseLength, dec.phrases.end());
    std::vector<std::size_t> counts;
    for (const auto& [phrase, count] : phrase_histogram(dec.phrases)) counts.push_back(count);
    return entropy_bits(counts);
}

std::size_t distinct_phrase_count(const DanceSequence& seq) {
    return phrase_histogram(phrase_decompose(seq).phrases).size();
}

double combined_complexity(const DanceSequence& seq, ComboWeights w) {
    if (!(w.averaged >= 0.0) || !(w.number >= 0.0) || std::abs(w.averaged + w.number - 1.0) > 1e-12)
        throw InvalidArgument("combination weights must be non-negative and sum to 1");
    return w.averaged * averaged_phrase_complexity(seq) + w.number * number_of_phrases_complexity(seq);
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw InvalidArgument("pearson: length mismatch");
    if (xs.size() < 2) throw InvalidArgument("pearson: need at least two points");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("pearson: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

void EnergyModel::validate() const {
    for (double c : step_cost)
        if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("step costs must be finite and non-negative");
    if (!std::isfinite(offset)) throw InvalidArgument("energy offset must be finite");
}

double total_energy(const DanceSequence& seq, const EnergyModel& model) {
    model.validate();
    double e = model.offset;
    for (Symbol s : seq.symbols()) e += model.step_cost[static_cast<std::size_t>(s)];
    return e;
}

EnergyFit fit_step_costs(const std::vector<DanceSequence>& corpus, const std::vector<double>& energies) {
    if (corpus.size() != energies.size()) throw InvalidArgument("fit_step_costs: corpus/energy length mismatch");
    if (corpus.size() < kAlphabetSize)
        throw InvalidArgument("fit_step_costs: need at least 4 sequences to determine 4 step costs");

    const auto rows = static_cast<Eigen::Index>(corpus.size());
    Eigen::MatrixXd counts(rows, static_cast<Eigen::Index>(kAlphabetSize));
    Eigen::VectorXd target(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto c = corpus[static_cast<std::size_t>(i)].counts();
        for (std::size_t k = 0; k < kAlphabetSize; ++k) counts(i, static_cast<Eigen::Index>(k)) = static_cast<double>(c[k]);
        target(i) = energies[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(counts);
    if (qr.rank() < static_cast<Eigen::Index>(kAlphabetSize))
        throw NumericalError("fit_step_costs: symbol-count matrix is rank deficient");
    const Eigen::VectorXd cost = qr.solve(target);

    EnergyFit fit;
    for (std::size_t k = 0; k < kAlphabetSize; ++k) fit.model.step_cost[k] = cost(static_cast<Eigen::Index>(k));
    fit.rms_residual = std::sqrt((counts * cost - target).squaredNorm() / static_cast<double>(rows));
    return fit;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& cell, std::size_t line, const char* column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        std::ostringstream msg;
        msg << "line " << line << ": column '" << column << "' is not a number: '" << cell << "'";
        throw ParseError(msg.str(), line);
    }
}

}  // namespace

std::vector<DanceSequence> read_corpus(std::istream& in) {
    std::vector<DanceSequence> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string body = trim(line);
        if (body.empty()) continue;
        std::string id;
        if (auto colon = body.find(':'); colon != std::string::npos) {
            id = trim(std::string_view(body).substr(0, colon));
            body = trim(std::string_view(body).substr(colon + 1));
        } else {
            id = std::to_string(out.size() + 1);
        }
        try {
            out.push_back(parse_sequence(body, id));
        } catch (const ParseError& e) {
            std::ostringstream msg;
            msg << "line " << lineno << ": " << e.what();
            throw ParseError(msg.str(), lineno);
        }
    }
    return out;
}

std::vector<DanceSequence> read_corpus_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file '" + path + "'", 0);
    try {
        return read_corpus(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.position());
    }
}

ScoreTable read_scores(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    ScoreTable out;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const auto cells = split_csv(line);
        if (!header_seen) {
            const std::vector<std::string> expected{"dance", "mean_score", "std", "energy_cm"};
            if (cells != expected)
                throw ParseError("line " + std::to_string(lineno) +
                                     ": expected header 'dance,mean_score,std,energy_cm'",
                                 lineno);
            header_seen = true;
            continue;
        }
        if (cells.size() != 4)
            throw ParseError("line " + std::to_string(lineno) + ": expected 4 columns, got " +
                                 std::to_string(cells.size()),
                             lineno);
        ScoreRow row;
        row.dance = cells[0];
        if (row.dance.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty dance id", lineno);
        row.mean_score = parse_number(cells[1], lineno, "mean_score");
        row.std = parse_number(cells[2], lineno, "std");
        if (row.std < 0.0)
            throw ParseError("line " + std::to_string(lineno) + ": negative standard deviation", lineno);
        if (!cells[3].empty()) row.energy_cm = parse_number(cells[3], lineno, "energy_cm");
        out.push_back(std::move(row));
    }
    if (!header_seen) throw ParseError("missing header 'dance,mean_score,std,energy_cm'", lineno);
    return out;
}

ScoreTable read_scores_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scores file '" + path + "'", 0);
    try {
        return read_scores(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.position());
    }
}

namespace {

std::optional<double> maybe_pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() < 2 || xs.size() != ys.size()) return std::nullopt;
    try {
        return pearson(xs, ys);
    } catch (const InvalidArgument&) {
        return std::nullopt;
    }
}

}  // namespace

ComplexityReport metric_report(const std::vector<DanceSequence>& corpus,
                               const std::optional<ScoreTable>& scores, ComboWeights weights) {
    if (!(weights.averaged >= 0.0) || !(weights.number >= 0.0) ||
        std::abs(weights.averaged + weights.number - 1.0) > 1e-12)
        throw InvalidArgument("combination weights must be non-negative and sum to 1");

    ComplexityReport report;
    report.weights = weights;

    std::set<std::string> corpus_ids;
    for (const auto& seq : corpus)
        if (!corpus_ids.insert(seq.id()).second) throw InvalidArgument("duplicate dance id in corpus: '" + seq.id() + "'");

    std::map<std::string, const ScoreRow*> by_id;
    if (scores) {
        for (const auto& row : *scores)
            if (!by_id.emplace(row.dance, &row).second)
                throw InvalidArgument("duplicate dance id in scores: '" + row.dance + "'");
        if (scores->size() != corpus.size())
            throw InvalidArgument("corpus has " + std::to_string(corpus.size()) + " dances but scores have " +
                                  std::to_string(scores->size()));
    }

    for (const auto& seq : corpus) {
        DanceMetrics m;
        m.id = seq.id();
        m.sequence = seq.str();
        m.symbol_frequency = symbol_frequency_complexity(seq);
        if (seq.size() >= kPhraseLength) {
            m.averaged_phrase = averaged_phrase_complexity(seq);
            m.distinct_phrases = distinct_phrase_count(seq);
        }
        if (seq.size() >= kPhraseWindow) {
            m.number_of_phrases = number_of_phrases_complexity(seq);
            m.combined = weights.averaged * *m.averaged_phrase + weights.number * *m.number_of_phrases;
        }
        if (scores) {
            auto it = by_id.find(seq.id());
            if (it == by_id.end()) throw InvalidArgument("no score row for dance '" + seq.id() + "'");
            m.mean_score = it->second->mean_score;
            m.score_std = it->second->std;
            m.energy_cm = it->second->energy_cm;
        }
        report.dances.push_back(std::move(m));
    }

    if (!scores) return report;

    // Each metric row is correlated over the dances on which it is defined.
    auto column = [&](auto getter, const char* name, std::optional<double>& slot) {
        std::vector<double> xs, ys;
        for (const auto& d : report.dances) {
            const std::optional<double> v = getter(d);
            if (!v) continue;
            xs.push_back(*v);
            ys.push_back(*d.mean_score);
            report.scatter.push_back({name, d.id, *v, *d.mean_score});
        }
        slot = maybe_pearson(xs, ys);
    };

    Correlations corr;
    column([](const DanceMetrics& d) { return std::optional<double>(d.symbol_frequency); }, "symbol_frequency",
           corr.symbol_frequency);
    column([](const DanceMetrics& d) { return d.averaged_phrase; }, "averaged_phrase", corr.averaged_phrase);
    column([](const DanceMetrics& d) { return d.number_of_phrases; }, "number_of_phrases", corr.number_of_phrases);
    column([](const DanceMetrics& d) { return d.combined; }, "combined", corr.combined);
    column([](const DanceMetrics& d) { return d.energy_cm; }, "energy", corr.energy);
    report.correlations = corr;
    return report;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::string report_to_json(const ComplexityReport& report) {
    using nlohmann::json;
    json dances = json::array();
    for (const auto& d : report.dances) {
        json j;
        j["id"] = d.id;
        j["sequence"] = d.sequence;
        j["symbol_frequency_complexity"] = d.symbol_frequency;
        j["averaged_phrase_complexity"] = opt(d.averaged_phrase);
        j["number_of_phrases_complexity"] = opt(d.number_of_phrases);
        j["combined_complexity"] = opt(d.combined);
        j["distinct_phrases"] = d.distinct_phrases ? json(*d.distinct_phrases) : json(nullptr);
        if (d.mean_score) {
            j["mean_score"] = *d.mean_score;
            j["score_std"] = *d.score_std;
            j["energy_cm"] = opt(d.energy_cm);
        }
        dances.push_back(std::move(j));
    }
    json root;
    root["dances"] = std::move(dances);
    root["weights"] = {{"averaged_phrase", report.weights.averaged}, {"number_of_phrases", report.weights.number}};
    if (report.correlations) {
        const auto& c = *report.correlations;
        root["correlations"] = {{"symbol_frequency", opt(c.symbol_frequency)},
                                {"averaged_phrase", opt(c.averaged_phrase)},
                                {"number_of_phrases", opt(c.number_of_phrases)},
                                {"combined", opt(c.combined)},
                                {"energy", opt(c.energy)}};
    }
    return root.dump(2) + "\n";
}

std::string scatter_to_csv(const ComplexityReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "metric,dance,value,mean_score\n";
    for (const auto& p : report.scatter) out << p.metric << ',' << p.dance << ',' << p.value << ',' << p.mean_score << '\n';
    return out.str();
}

}  // namespace ccomm::seqkit
