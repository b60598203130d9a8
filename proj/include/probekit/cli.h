#ifndef PROBEKIT_CLI_H_
#define PROBEKIT_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace probekit {

// Runs one command line (without the program name). Returns the process exit
// code: 0 success, 1 validation error, 2 usage error.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Closest candidate within a small edit distance, or "".
std::string SuggestName(const std::string& word, const std::vector<std::string>& candidates);

}  // namespace probekit

#endif  // PROBEKIT_CLI_H_
