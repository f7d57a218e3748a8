#pragma once

#include <iosfwd>

namespace sasim::cli {

/// Entry point of the `sasim` command. Returns the process exit status.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sasim::cli
