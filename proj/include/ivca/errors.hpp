#ifndef IVCA_ERRORS_HPP
#define IVCA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ivca {

/// Machine-readable error category. The HTTP layer maps these onto status codes.
enum class ErrorCode {
    Validation,
    InsufficientData,
    Conditioning,
    Protocol,
    SessionComplete,
    Contract,
    NotFound,
    Io,
    UndefinedCorrelation,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(ErrorCode::Validation, field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what) : Error(ErrorCode::InsufficientData, what) {}
};

class ConditioningError : public Error {
public:
    explicit ConditioningError(const std::string& what) : Error(ErrorCode::Conditioning, what) {}
};

class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(ErrorCode::Protocol, what) {}
};

class SessionCompleteError : public Error {
public:
    explicit SessionCompleteError(const std::string& what) : Error(ErrorCode::SessionComplete, what) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorCode::Contract, what) {}
};

class UndefinedCorrelationError : public Error {
public:
    explicit UndefinedCorrelationError(const std::string& what) : Error(ErrorCode::UndefinedCorrelation, what) {}
};

} // namespace ivca

#endif // IVCA_ERRORS_HPP
