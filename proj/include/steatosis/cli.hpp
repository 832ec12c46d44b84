#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace steatosis {

// Exit statuses of the command-line tool.
enum ExitStatus : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitData = 3,
    kExitTraining = 4,
    kExitIo = 5,
};

// Runs `steatosis <args...>`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace steatosis
