#include "idl/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace idl {

static_assert(std::endian::native == std::endian::little,
              "matrix container assumes a little-endian host");

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_matrix: cannot open " + path.string());
    const std::uint64_t rows = m.rows(), cols = m.cols();
    f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    f.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!f) throw std::runtime_error("save_matrix: write failed for " + path.string());
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_matrix: cannot open " + path.string());
    std::uint64_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!f) throw std::runtime_error("load_matrix: truncated header in " + path.string());
    Matrix m(rows, cols);
    f.read(reinterpret_cast<char*>(m.data()),
           static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!f) throw std::runtime_error("load_matrix: truncated data in " + path.string());
    return m;
}

void save_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_matrix_csv: cannot open " + path.string());
    f << std::setprecision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            f << m(i, j);
        }
        f << '\n';
    }
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("file_digest: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        for (std::streamsize i = 0; i < f.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream out;
    out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

}  // namespace idl
