#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "idl/baselines.hpp"
#include "idl/equilibrium.hpp"
#include "idl/sequence.hpp"

namespace idl {

enum class ModelKind { implicit, implicit_rnn, mlp, elman };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct AnyModel {
    std::variant<ImplicitModel, ImplicitRnn, MlpModel, ElmanRnn> value;

    ModelKind kind() const {
        return static_cast<ModelKind>(value.index());
    }
    template <class T> T& as() { return std::get<T>(value); }
    template <class T> const T& as() const { return std::get<T>(value); }
    bool is_implicit() const {
        return kind() == ModelKind::implicit || kind() == ModelKind::implicit_rnn;
    }
};

// Single-file binary checkpoint: versioned header, model kind tag, all
// parameter matrices, solver settings and the init seed.
void save_checkpoint(const AnyModel& model, std::uint64_t init_seed,
                     const std::filesystem::path& path);
std::pair<AnyModel, std::uint64_t> load_checkpoint(const std::filesystem::path& path);

}  // namespace idl
