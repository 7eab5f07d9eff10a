#pragma once

#include <stdexcept>
#include <string>

#include "gdla/diagnostics.hpp"
#include "gdla/tensor.hpp"

namespace gdla {

// File-format failures carry a machine-checkable reason.
class IoError : public std::runtime_error {
public:
    enum class Kind { MalformedHeader, CountMismatch, BadToken, FileFailure };

    IoError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// %.17g: shortest text that reproduces the double exactly on re-read.
std::string format_double(double v);

// Plain-text tensor format: line 1 "shape d0 d1 ... d{r-1}", then exactly
// product(shape) whitespace-separated values in row-major order.
std::string tensor_to_text(const Tensor& t);
Tensor tensor_from_text(const std::string& text);
void write_tensor(const Tensor& t, const std::string& path);
Tensor read_tensor(const std::string& path);

// ASCII PGM ("P2", maxval 255), one gray level per token, round-half-up of
// 255 * value. Map values must lie in [0, 1].
std::string pgm_to_text(const DiagnosticMap& map);
void write_pgm(const DiagnosticMap& map, const std::string& path);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace gdla
