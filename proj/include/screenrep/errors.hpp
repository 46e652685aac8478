#pragma once

#include <stdexcept>
#include <string>

namespace screenrep {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition on caller-supplied data (bad argument, empty input, dimension mismatch).
class InputError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents: manifests, head files, checkpoints, analytics documents.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A model file is missing or unusable; raised at load time.
class ModelError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Raised when a film yields no faces: a report cannot be fabricated from nothing.
class NoFacesError : public Error {
public:
    NoFacesError() : Error("no faces detected") {}
};

}  // namespace screenrep
