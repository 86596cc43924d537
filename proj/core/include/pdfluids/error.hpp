/******************************************************************************
 *
 * pdfluids
 * Copyright 2026 The pdfluids Authors
 *
 * This program is free software, distributed under the terms of the
 * Apache License, Version 2.0
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Exception types
 *
 ******************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace pdfluids {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Grids of different shape were combined.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

//! Out-of-range parameter or malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

//! An iterative solver hit its iteration cap; carries the last residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations)
  {
  }
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

//! Malformed grid file or configuration document.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdfluids
