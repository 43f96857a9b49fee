#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "franklin/inequality_lab.hpp"

namespace franklin {

/// Effective settings of one command-line run. `values` holds every option of
/// the command after applying defaults, the config file, FRANKLIN_* variables
/// and flags, in that order of precedence.
struct RunConfig {
    std::string command;
    /// Anchor of `verify`; empty otherwise.
    std::string anchor;
    std::map<std::string, std::string> values;

    [[nodiscard]] const std::string& get(const std::string& key) const;
    [[nodiscard]] bool flag(const std::string& key) const;
};

/// Flat `key = value` lines; `#` starts a comment.
[[nodiscard]] std::map<std::string, std::string> read_config_file(const std::string& path);
/// The config-file form of a run, replayable with `--config`.
[[nodiscard]] std::string format_config(const RunConfig& cfg);

/// Shortest decimal that reads back to the same double; "nan", "inf", "-inf" otherwise.
[[nodiscard]] std::string format_number(double v);
/// Header line plus one line per row.
[[nodiscard]] std::string table_to_csv(const Table& t);

/// Reports of several runs under one anchor: constants and tables get the
/// part label as prefix; the verdict fails if any part fails.
[[nodiscard]] ExperimentReport merge_reports(const std::string& id, const std::string& anchor,
                                             const std::vector<std::pair<std::string, ExperimentReport>>& parts);

/// Runs the command line (without the program name). Returns 0 when every
/// verdict passes, 1 on a failing verdict, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace franklin
