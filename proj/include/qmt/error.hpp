#pragma once

#include <stdexcept>
#include <string>

namespace qmt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Objects from different history spaces or orders were combined.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Malformed user input (files, representatives, configs).
class InputError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class HermiticityError : public Error {
 public:
  using Error::Error;
};

class StrongPositivityError : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// Event operator requested for a region where PoZ fails.
class InconsistentDefinition : public Error {
 public:
  using Error::Error;
};

// Event operator image leaves the domain sub-Hilbert space.
class CodomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmt
