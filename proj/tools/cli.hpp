/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Command-line front end
 *
 ******************************************************************************/
#pragma once

namespace pdfluids {

//! Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadConfig = 2,
  kExitNotConverged = 3,
};

//! Entry point of the `pdfluids` tool: subcommands simulate, guide, upres,
//! compare-methods and dam.
int cli_main(int argc, char** argv);

}  // namespace pdfluids
