#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssc {

// Bad argument values or malformed in-memory inputs.
class invalid_input : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Projection target lies at or behind the camera plane.
class behind_camera_error : public invalid_input {
public:
    using invalid_input::invalid_input;
};

// Text parser failure. Carries the 1-based line number and the offending
// key/field so callers can point at the exact spot in the file.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& msg, std::size_t line, std::string field)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ", field '" + field + "')"),
          line_(line),
          field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

// Binary codec failure. `offset` is the byte position at which decoding
// could not continue.
class codec_error : public std::runtime_error {
public:
    codec_error(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Missing or inconsistent on-disk data discovered while running a pipeline.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ssc
