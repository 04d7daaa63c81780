#pragma once

#include <stdexcept>
#include <string>

namespace ledgerone {

/// Base class for all protocol-level failures.
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

/// Transport-level failure talking to a model endpoint. Retryable.
class TransportError : public ProtocolError {
public:
    explicit TransportError(const std::string& what) : ProtocolError(what) {}
};

/// Response did not parse against the requested response schema.
class SchemaError : public ProtocolError {
public:
    explicit SchemaError(const std::string& what) : ProtocolError(what) {}
};

/// A scripted model received a request that no rule matches.
class NoRuleMatched : public ProtocolError {
public:
    explicit NoRuleMatched(const std::string& what) : ProtocolError(what) {}
};

/// Sandbox infrastructure failure, distinct from the program failing.
class SandboxError : public std::runtime_error {
public:
    explicit SandboxError(const std::string& what) : std::runtime_error(what) {}
};

/// Site manifest failed validation.
class ManifestError : public std::runtime_error {
public:
    explicit ManifestError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ledgerone
