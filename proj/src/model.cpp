#include "idl/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace idl {

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::implicit: return "implicit";
        case ModelKind::implicit_rnn: return "implicit-rnn";
        case ModelKind::mlp: return "mlp";
        case ModelKind::elman: return "elman";
    }
    throw std::invalid_argument("model_kind_name: unknown kind");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "implicit") return ModelKind::implicit;
    if (name == "implicit-rnn") return ModelKind::implicit_rnn;
    if (name == "mlp") return ModelKind::mlp;
    if (name == "elman") return ModelKind::elman;
    throw std::invalid_argument("unknown model kind: " + name);
}

namespace {

constexpr std::uint32_t kMagic = 0x434c4449;  // "IDLC"
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_matrix(std::ostream& os, const Matrix& m) {
    put<std::uint64_t>(os, m.rows());
    put<std::uint64_t>(os, m.cols());
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix get_matrix(std::istream& is) {
    const auto rows = get<std::uint64_t>(is);
    const auto cols = get<std::uint64_t>(is);
    Matrix m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated matrix");
    return m;
}

void put_vector(std::ostream& os, const Vector& v) {
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Vector get_vector(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    Vector v(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated vector");
    return v;
}

void put_implicit(std::ostream& os, const ImplicitModel& m) {
    put_matrix(os, m.A);
    put_matrix(os, m.B);
    put_matrix(os, m.C);
    put_matrix(os, m.D);
    put<double>(os, m.epsilon);
    put<std::int32_t>(os, m.max_iterations);
    put<double>(os, m.norm_bound);
    put<std::uint8_t>(os, m.feedback ? 1 : 0);
}

ImplicitModel get_implicit(std::istream& is) {
    ImplicitModel m;
    m.A = get_matrix(is);
    m.B = get_matrix(is);
    m.C = get_matrix(is);
    m.D = get_matrix(is);
    m.epsilon = get<double>(is);
    m.max_iterations = get<std::int32_t>(is);
    m.norm_bound = get<double>(is);
    m.feedback = get<std::uint8_t>(is) != 0;
    return m;
}

}  // namespace

void save_checkpoint(const AnyModel& model, std::uint64_t init_seed,
                     const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    put(os, kMagic);
    put(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(model.kind()));
    put<std::uint64_t>(os, init_seed);
    switch (model.kind()) {
        case ModelKind::implicit:
            put_implicit(os, model.as<ImplicitModel>());
            break;
        case ModelKind::implicit_rnn: {
            const auto& m = model.as<ImplicitRnn>();
            put_implicit(os, m.core);
            put<std::uint64_t>(os, m.input_dim);
            put<std::uint64_t>(os, m.hidden_dim);
            put<std::uint8_t>(os, m.has_readout ? 1 : 0);
            if (m.has_readout) {
                put_matrix(os, m.readout_w);
                put_vector(os, m.readout_b);
            }
            break;
        }
        case ModelKind::mlp: {
            const auto& m = model.as<MlpModel>();
            put<std::uint64_t>(os, m.weights.size());
            for (std::size_t l = 0; l < m.weights.size(); ++l) {
                put_matrix(os, m.weights[l]);
                put_vector(os, m.biases[l]);
            }
            break;
        }
        case ModelKind::elman: {
            const auto& m = model.as<ElmanRnn>();
            put_matrix(os, m.w_xh);
            put_matrix(os, m.w_hh);
            put_matrix(os, m.w_hy);
            put_vector(os, m.b_h);
            put_vector(os, m.b_y);
            break;
        }
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

std::pair<AnyModel, std::uint64_t> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    if (get<std::uint32_t>(is) != kMagic)
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
    if (get<std::uint32_t>(is) != kVersion)
        throw std::runtime_error("load_checkpoint: unsupported version in " + path.string());
    const auto kind = static_cast<ModelKind>(get<std::uint32_t>(is));
    const auto seed = get<std::uint64_t>(is);
    AnyModel model;
    switch (kind) {
        case ModelKind::implicit:
            model.value = get_implicit(is);
            break;
        case ModelKind::implicit_rnn: {
            ImplicitRnn m;
            m.core = get_implicit(is);
            m.input_dim = get<std::uint64_t>(is);
            m.hidden_dim = get<std::uint64_t>(is);
            m.has_readout = get<std::uint8_t>(is) != 0;
            if (m.has_readout) {
                m.readout_w = get_matrix(is);
                m.readout_b = get_vector(is);
            }
            model.value = std::move(m);
            break;
        }
        case ModelKind::mlp: {
            MlpModel m;
            const auto layers = get<std::uint64_t>(is);
            for (std::uint64_t l = 0; l < layers; ++l) {
                m.weights.push_back(get_matrix(is));
                m.biases.push_back(get_vector(is));
            }
            model.value = std::move(m);
            break;
        }
        case ModelKind::elman: {
            ElmanRnn m;
            m.w_xh = get_matrix(is);
            m.w_hh = get_matrix(is);
            m.w_hy = get_matrix(is);
            m.b_h = get_vector(is);
            m.b_y = get_vector(is);
            model.value = std::move(m);
            break;
        }
        default:
            throw std::runtime_error("load_checkpoint: unknown model kind tag");
    }
    return {std::move(model), seed};
}

}  // namespace idl
