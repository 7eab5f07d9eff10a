#include "gdla/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gdla {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string tensor_to_text(const Tensor& t) {
    std::ostringstream os;
    os << "shape";
    for (std::size_t d : t.shape) os << " " << d;
    os << "\n";
    const std::size_t per_line = t.rank() == 2 ? t.shape[1] : t.numel();
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        os << format_double(t.data[i]);
        os << ((per_line > 0 && (i + 1) % per_line == 0) ? "\n" : " ");
    }
    if (t.data.empty()) os << "\n";
    return os.str();
}

Tensor tensor_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string word;
    if (!(is >> word) || word != "shape") {
        throw IoError(IoError::Kind::MalformedHeader,
                      "tensor: header must start with 'shape'");
    }
    std::string header_rest;
    std::getline(is, header_rest);
    std::istringstream hs(header_rest);
    std::vector<std::size_t> dims;
    long long d = 0;
    while (hs >> d) {
        if (d < 1) {
            throw IoError(IoError::Kind::MalformedHeader,
                          "tensor: extents must be positive");
        }
        dims.push_back(static_cast<std::size_t>(d));
    }
    if (!hs.eof()) {
        throw IoError(IoError::Kind::MalformedHeader,
                      "tensor: non-numeric extent in header");
    }
    if (dims.empty()) {
        throw IoError(IoError::Kind::MalformedHeader, "tensor: header lists no extents");
    }

    std::size_t expected = 1;
    for (std::size_t e : dims) expected *= e;
    std::vector<double> values;
    values.reserve(expected);
    while (is >> word) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(word, &used);
        } catch (const std::exception&) {
            throw IoError(IoError::Kind::BadToken, "tensor: non-numeric token '" + word + "'");
        }
        if (used != word.size()) {
            throw IoError(IoError::Kind::BadToken, "tensor: non-numeric token '" + word + "'");
        }
        if (!std::isfinite(v)) {
            throw IoError(IoError::Kind::BadToken, "tensor: non-finite value '" + word + "'");
        }
        values.push_back(v);
        if (values.size() > expected) {
            throw IoError(IoError::Kind::CountMismatch,
                          "tensor: more values than shape allows");
        }
    }
    if (values.size() != expected) {
        throw IoError(IoError::Kind::CountMismatch,
                      "tensor: expected " + std::to_string(expected) + " values, got " +
                          std::to_string(values.size()));
    }
    return Tensor(std::move(dims), std::move(values));
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(IoError::Kind::FileFailure, "cannot open for write: " + path);
    out << contents;
    if (!out) throw IoError(IoError::Kind::FileFailure, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::FileFailure, "cannot open for read: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_tensor(const Tensor& t, const std::string& path) {
    write_text_file(path, tensor_to_text(t));
}

Tensor read_tensor(const std::string& path) {
    return tensor_from_text(read_text_file(path));
}

std::string pgm_to_text(const DiagnosticMap& map) {
    for (double v : map.values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("pgm: map values must lie in [0, 1]");
        }
    }
    std::ostringstream os;
    os << "P2\n" << map.grid.width << " " << map.grid.height << "\n255\n";
    for (std::size_t r = 0; r < map.grid.height; ++r) {
        for (std::size_t c = 0; c < map.grid.width; ++c) {
            const double v = map.values[r * map.grid.width + c];
            const int gray = static_cast<int>(std::floor(255.0 * v + 0.5));
            os << gray << (c + 1 == map.grid.width ? "\n" : " ");
        }
    }
    return os.str();
}

void write_pgm(const DiagnosticMap& map, const std::string& path) {
    write_text_file(path, pgm_to_text(map));
}

}  // namespace gdla
