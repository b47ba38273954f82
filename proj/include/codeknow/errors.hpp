#pragma once

#include <stdexcept>
#include <string>

namespace codeknow {

/// Base of every failure raised while mining a repository.
class MiningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnreachableRemote : public MiningError {
public:
    using MiningError::MiningError;
};

class UnknownBranch : public MiningError {
public:
    using MiningError::MiningError;
};

class CloneFailure : public MiningError {
public:
    using MiningError::MiningError;
};

class CorruptHistory : public MiningError {
public:
    using MiningError::MiningError;
};

/// Raised when a model is evaluated outside its domain (e.g. a file of size 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// No non-removed developer is an expert of any remaining file.
class NoExpertsLeft : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Pipeline / service errors.

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AuthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotReady : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DuplicateUsername : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidCredentials : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace codeknow
