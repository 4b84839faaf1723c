#pragma once

// Command-line front end: typed experiment configuration, CSV output and
// plot-script generation.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qal/errors.hpp"

namespace qal::cli {

/// Per-key validation failure; the message names the key and expected type.
class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : InvalidArgument("--" + key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class UnknownSchema : public Error {
 public:
  using Error::Error;
};

enum class ValueType { kInt, kUint, kReal, kRealList, kEnum, kString };

enum class Source { kDefault, kFile, kFlag, kEnv };

const char* source_name(Source s);

struct KeySpec {
  std::string name;
  ValueType type = ValueType::kReal;
  std::string fallback;  ///< default as text; empty = required (or optional list)
  std::string help;
  std::vector<std::string> choices;  ///< for kEnum
  bool required = false;
  bool echo = true;  ///< false for settings that must not affect output bytes
};

using Value =
    std::variant<std::int64_t, std::uint64_t, double, std::vector<double>, std::string>;

struct Entry {
  Value value;
  std::string text;  ///< normalized text used in the config echo
  Source source = Source::kDefault;
};

struct ExperimentConfig {
  std::string command;
  std::map<std::string, Entry> entries;  ///< every key of the command, resolved
  std::uint64_t seed = 1;
  std::string out = "-";
  unsigned workers = 1;

  bool has(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  ///< integer(key) as size_t
  double real(const std::string& key) const;
  const std::vector<double>& list(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  Source source(const std::string& key) const;
};

/// Commands that write CSV plus the plot-script helper.
const std::vector<std::string>& command_names();
/// Keys accepted by `command` (shared keys included).
const std::vector<KeySpec>& command_keys(const std::string& command);

/// Resolves `args` (everything after the command name). Flags are
/// `--key value` or `--key=value`; `--config path` reads a `key = value`
/// file with `#` comments. Flags override the file; QAL_SEED (passed as
/// `env_seed`) is used when neither sets the seed.
ExperimentConfig parse_config(const std::string& command,
                              std::span<const std::string> args,
                              const char* env_seed = nullptr);

/// Formats a double in shortest round-trip form.
std::string format_number(double v);

/// CSV file: `#` metadata lines, header row, data rows.
struct CsvTable {
  std::vector<std::string> metadata;  ///< without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Writes metadata, header and rows; a trailing `# run:` line carries the
/// timestamp and worker count.
void write_csv(std::ostream& os, const CsvTable& table, const std::string& run_line);
CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::string& path);

enum class PlotKind { kAuto, kHistogram, kConvergence, kWavepacket };

/// Writes a matplotlib script rendering `csv_path` to `script_path`; with
/// kAuto the kind is picked from the header. UnknownSchema otherwise.
PlotKind emit_plot_script(const std::string& csv_path, const std::string& script_path,
                          PlotKind kind = PlotKind::kAuto);

/// Entry point: args[0] is the command. Returns the process exit code
/// (0 ok, 1 validation error, 2 numerical-report failure).
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err,
        const char* env_seed = nullptr);

std::string help_text();

}  // namespace qal::cli
