#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcg {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration values (bad ranges, conflicting flags, unusable presets).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad input data: corpora, datasets, indexes with impossible content.
class DataError : public Error {
public:
    using Error::Error;
};

// Structured provider output that could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

// Doc2Query response unusable even after the salvage pass; names the chunk.
class ExpansionParseError : public ParseError {
public:
    ExpansionParseError(const std::string& chunk_id, const std::string& what)
        : ParseError("expansion parse failed for chunk '" + chunk_id + "': " + what),
          chunk_id_(chunk_id) {}
    const std::string& chunk_id() const { return chunk_id_; }

private:
    std::string chunk_id_;
};

// Judge produced no parseable verdict after the reprompt.
class JudgeParseError : public ParseError {
public:
    using ParseError::ParseError;
};

// Transport-level provider failure after the retry budget was exhausted.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what, int attempts = 1,
                            std::vector<std::size_t> batch_indices = {})
        : Error(what), attempts_(attempts), batch_indices_(std::move(batch_indices)) {}
    int attempts() const { return attempts_; }
    // Global positions of the inputs in the failing batch, when applicable.
    const std::vector<std::size_t>& batch_indices() const { return batch_indices_; }

private:
    int attempts_;
    std::vector<std::size_t> batch_indices_;
};

// Scripted double saw a prompt it has no canned response for.
class FixtureError : public DataError {
public:
    using DataError::DataError;
};

// Index file problems, one subclass per failure mode.
class IndexFormatError : public DataError {
public:
    using DataError::DataError;
};

class IndexVersionError : public IndexFormatError {
public:
    using IndexFormatError::IndexFormatError;
};

class IndexChecksumError : public IndexFormatError {
public:
    IndexChecksumError(const std::string& section, const std::string& what)
        : IndexFormatError("checksum mismatch in section '" + section + "': " + what),
          section_(section) {}
    const std::string& section() const { return section_; }

private:
    std::string section_;
};

class IndexTruncatedError : public IndexFormatError {
public:
    using IndexFormatError::IndexFormatError;
};

}  // namespace qcg
