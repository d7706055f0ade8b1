#pragma once

namespace vinestep {

/// Entry point of the `vinestep` command-line tool. Returns the process exit
/// code: 0 success, 1 numerical failure, 2 usage or configuration error.
int run_cli(int argc, char** argv);

}  // namespace vinestep
