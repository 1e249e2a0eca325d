// Command-line front end: ingest | split | fit | simulate | risk | crosscorr.
// Exit codes: 0 success, 2 data error, 3 numerical error, 4 config error.
#pragma once

#include <string>
#include <vector>

namespace seaspde {

int run_cli(const std::vector<std::string>& args);

}  // namespace seaspde
