#pragma once

// Experiment runner behind the `rara` command-line tool.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rara::cli {

enum class Mode { Theory, Sim, Compare, Phy };
enum class Format { Csv, Json };
enum class Arrivals { Poisson, Finite };
enum class Rule { Threshold, Phy };

/// Flag and config-file values as given, before any parsing.
struct RawSpec {
  std::string mode;
  std::optional<std::string> lambda;
  std::optional<std::string> m;
  std::optional<std::string> k;
  std::optional<std::string> epsilon;
  std::optional<std::string> sessions;
  std::optional<std::string> trials;
  std::optional<std::string> seed;
  std::optional<std::string> snr_db;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> arrivals;
  std::optional<std::string> rule;
  std::optional<std::string> threads;
};

struct ExperimentSpec {
  Mode mode = Mode::Theory;
  std::vector<double> lambda_grid;
  std::vector<int> m_grid;
  std::vector<int> k_grid;  // phy only; empty means 1..M+1 for each M
  double epsilon = 0.1;
  std::int64_t n_sessions = 1'000'000;
  std::int64_t trials = 10'000;
  std::uint64_t seed = 0;
  std::optional<double> snr_db;
  std::string output_path;  // empty or "-" writes to stdout
  Format format = Format::Csv;
  Arrivals arrivals = Arrivals::Poisson;
  Rule rule = Rule::Threshold;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Every validation failure found in a RawSpec, one message per problem.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "0.8", "0.1,0.5,0.9" or the inclusive range "0.1:1.5:0.1".
std::vector<double> parse_real_grid(const std::string& text);

/// "10", "1,5,10", "1:30" or "1:30:2".
std::vector<int> parse_int_grid(const std::string& text);

/// Applies defaults and checks every field, throwing SpecError listing all
/// failures at once.
ExperimentSpec validate_spec(const RawSpec& raw);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Column layout of each mode; stable across releases.
std::vector<std::string> columns_for(Mode mode);

/// Evaluates the experiment. Rows follow grid order (lambda outer, m inner).
Table run_experiment(const ExperimentSpec& spec);

/// Shortest round-trippable decimal form.
std::string format_cell(const Cell& cell);

std::string render(const Table& table, Format format);

/// Writes through a temporary sibling file and renames it into place, so a
/// failed write leaves nothing behind. Throws OutputError.
void write_output(const std::string& text, const std::filesystem::path& path);

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

}  // namespace rara::cli
