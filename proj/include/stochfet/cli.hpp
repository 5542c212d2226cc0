#pragma once

namespace stochfet {

// Command-line entry point. Returns the process exit code: 0 on success,
// 1 on a domain error (bad data, bad config, degenerate model), 2 on a
// usage error (unknown subcommand or flag).
int cli_main(int argc, char** argv);

}  // namespace stochfet
