#ifndef QINTERP_ERRORS_HPP
#define QINTERP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qinterp {

// Base class for all engine errors. `category` is a short machine-readable
// tag used by the CLI for exit diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

// Malformed input file. Carries file path and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& message)
      : Error("parse", file + ":" + std::to_string(line) + ": " + message),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Corpus record violating the schema. Carries record id and field name.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& record_id, const std::string& field,
              const std::string& message)
      : Error("schema", "record '" + record_id + "', field '" + field + "': " + message),
        record_id_(record_id),
        field_(field) {}

  const std::string& record_id() const { return record_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string record_id_;
  std::string field_;
};

// Invalid query input (empty, too long).
class QueryError : public Error {
 public:
  explicit QueryError(const std::string& message) : Error("query", message) {}
};

// Snapshot directory missing, corrupt, or failing checksum verification.
class SnapshotError : public Error {
 public:
  explicit SnapshotError(const std::string& message) : Error("snapshot", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace qinterp

#endif  // QINTERP_ERRORS_HPP
