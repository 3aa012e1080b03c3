#pragma once

// Dance-sequence model and the entropy-based complexity metrics computed
// over it, plus the step-energy model and the corpus-level report.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccomm::seqkit {

/// One of the four motion primitives.
enum class Symbol : unsigned char { A = 0, B = 1, C = 2, D = 3 };

inline constexpr std::size_t kAlphabetSize = 4;
inline constexpr std::size_t kPhraseLength = 4;
inline constexpr std::size_t kCanonicalLength = 23;
/// Number of leading symbols used by the number-of-phrases metric.
inline constexpr std::size_t kPhraseWindow = 20;

char to_char(Symbol s);

class DanceSequence {
public:
    DanceSequence() = default;
    explicit DanceSequence(std::vector<Symbol> symbols, std::string id = {});

    const std::vector<Symbol>& symbols() const noexcept { return symbols_; }
    const std::string& id() const noexcept { return id_; }
    std::size_t size() const noexcept { return symbols_.size(); }
    bool empty() const noexcept { return symbols_.empty(); }

    /// Occurrence count per symbol, indexed by Symbol value.
    std::array<std::size_t, kAlphabetSize> counts() const;
    std::string str() const;

    friend bool operator==(const DanceSequence&, const DanceSequence&) = default;

private:
    std::vector<Symbol> symbols_;
    std::string id_;
};

class Phrase {
public:
    explicit Phrase(std::array<Symbol, kPhraseLength> symbols) : symbols_(symbols) {}
    const std::array<Symbol, kPhraseLength>& symbols() const noexcept { return symbols_; }
    std::string str() const;

    friend auto operator<=>(const Phrase&, const Phrase&) = default;

private:
    std::array<Symbol, kPhraseLength> symbols_;
};

struct PhraseDecomposition {
    std::vector<Phrase> phrases;
    std::vector<Symbol> remainder;
};

/// Parses one symbol per character, ignoring whitespace and case.
/// Throws ParseError carrying the 1-based position of the first bad character.
DanceSequence parse_sequence(std::string_view text, std::string id = {});

/// Shannon entropy (bits) of the empirical distribution given by `counts`.
/// Zero counts contribute nothing.
double entropy_bits(const std::vector<std::size_t>& counts);

double symbol_frequency_complexity(const DanceSequence& seq);

/// Consecutive non-overlapping four-symbol groups from the start; whatever
/// is left over (fewer than four symbols) is returned as the remainder.
PhraseDecomposition phrase_decompose(const DanceSequence& seq);

double phrase_complexity(const Phrase& p);

/// Mean phrase complexity over the full phrases (remainder ignored).
double averaged_phrase_complexity(const DanceSequence& seq);

/// Entropy of the phrase distribution over the first twenty symbols.
double number_of_phrases_complexity(const DanceSequence& seq);

/// Number of distinct phrases among the full phrases of the sequence.
std::size_t distinct_phrase_count(const DanceSequence& seq);

struct ComboWeights {
    double averaged = 0.9;
    double number = 0.1;
};

double combined_complexity(const DanceSequence& seq, ComboWeights w = {});

/// Sample Pearson correlation coefficient.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// ---------------------------------------------------------------------------
// Energy model

struct EnergyModel {
    std::array<double, kAlphabetSize> step_cost{};  // centimeters per executed step
    double offset = 0.0;                             // centimeters per sequence

    void validate() const;
};

double total_energy(const DanceSequence& seq, const EnergyModel& model);

struct EnergyFit {
    EnergyModel model;
    double rms_residual = 0.0;
};

/// Least-squares fit of per-symbol step costs to measured energies.
EnergyFit fit_step_costs(const std::vector<DanceSequence>& corpus,
                         const std::vector<double>& energies);

// ---------------------------------------------------------------------------
// Corpus I/O and report

struct ScoreRow {
    std::string dance;
    double mean_score = 0.0;
    double std = 0.0;
    std::optional<double> energy_cm;
};

using ScoreTable = std::vector<ScoreRow>;

/// Reads a corpus: one sequence per line, optional "name:" prefix, `#`
/// comments and blank lines ignored. Unnamed lines get their 1-based
/// ordinal as id. ParseError::position() is the line number.
std::vector<DanceSequence> read_corpus(std::istream& in);
std::vector<DanceSequence> read_corpus_file(const std::string& path);

/// Reads the `dance,mean_score,std,energy_cm` CSV (energy may be empty).
ScoreTable read_scores(std::istream& in);
ScoreTable read_scores_file(const std::string& path);

struct DanceMetrics {
    std::string id;
    std::string sequence;
    double symbol_frequency = 0.0;
    std::optional<double> averaged_phrase;
    std::optional<double> number_of_phrases;
    std::optional<double> combined;
    std::optional<std::size_t> distinct_phrases;
    std::optional<double> mean_score;
    std::optional<double> score_std;
    std::optional<double> energy_cm;
};

struct Correlations {
    std::optional<double> symbol_frequency;
    std::optional<double> averaged_phrase;
    std::optional<double> number_of_phrases;
    std::optional<double> combined;
    std::optional<double> energy;
};

struct ScatterPoint {
    std::string metric;
    std::string dance;
    double value = 0.0;
    double mean_score = 0.0;
};

struct ComplexityReport {
    std::vector<DanceMetrics> dances;
    ComboWeights weights;
    /// Present only when scores were supplied.
    std::optional<Correlations> correlations;
    std::vector<ScatterPoint> scatter;
};

/// Recomputes the sequence metrics and, if `scores` is given, correlates
/// every metric row (and the ingested energy row) with the judges' means.
/// Correlations are left empty when fewer than two dances or a constant row
/// make them undefined. Throws InvalidArgument on id mismatch.
ComplexityReport metric_report(const std::vector<DanceSequence>& corpus,
                               const std::optional<ScoreTable>& scores,
                               ComboWeights weights = {});

/// Deterministic JSON text (sorted keys, round-trip precision).
std::string report_to_json(const ComplexityReport& report);
/// `metric,dance,value,mean_score` rows.
std::string scatter_to_csv(const ComplexityReport& report);

}  // namespace ccomm::seqkit
