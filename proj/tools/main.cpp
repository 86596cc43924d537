/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * pdfluids executable
 *
 ******************************************************************************/
#include "cli.hpp"

int main(int argc, char** argv)
{
  return pdfluids::cli_main(argc, argv);
}
