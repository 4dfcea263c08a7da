#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "l0sparse/dataset_io.hpp"
#include "l0sparse/models.hpp"

#include <json.hpp>

namespace l0sparse {

inline constexpr char kCheckpointMagic[4] = {'L', '0', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

namespace detail {

inline void write_library(ChecksumWriter& w, const LibrarySpec& lib) {
    w.u16(static_cast<std::uint16_t>(lib.kind));
    switch (lib.kind) {
        case LibrarySpec::Kind::polynomial:
            w.u32(static_cast<std::uint32_t>(lib.degree));
            w.u16(lib.include_bias ? 1 : 0);
            w.u16(lib.include_interactions ? 1 : 0);
            break;
        case LibrarySpec::Kind::fourier:
            w.u32(static_cast<std::uint32_t>(lib.n_frequencies));
            w.u16(lib.include_sin ? 1 : 0);
            w.u16(lib.include_cos ? 1 : 0);
            break;
        case LibrarySpec::Kind::generalized:
            w.u32(static_cast<std::uint32_t>(lib.parts.size()));
            for (const LibrarySpec& p : lib.parts) write_library(w, p);
            break;
    }
}

inline LibrarySpec read_library(ChecksumReader& r, const std::string& path) {
    LibrarySpec lib;
    const std::uint16_t kind = r.u16();
    if (kind > 2) throw DataFormatError(DataError::bad_schema, path + ": bad library kind");
    lib.kind = static_cast<LibrarySpec::Kind>(kind);
    switch (lib.kind) {
        case LibrarySpec::Kind::polynomial:
            lib.degree = static_cast<int>(r.u32());
            lib.include_bias = r.u16() != 0;
            lib.include_interactions = r.u16() != 0;
            break;
        case LibrarySpec::Kind::fourier:
            lib.n_frequencies = static_cast<int>(r.u32());
            lib.include_sin = r.u16() != 0;
            lib.include_cos = r.u16() != 0;
            break;
        case LibrarySpec::Kind::generalized: {
            const std::uint32_t n = r.u32();
            for (std::uint32_t i = 0; i < n; ++i) lib.parts.push_back(read_library(r, path));
            break;
        }
    }
    return lib;
}

}  // namespace detail

// Versioned binary container: spec, seed, every parameter tensor, CRC32.
inline void save_model(Model& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataFormatError(DataError::io, path + ": cannot open for writing");
    detail::ChecksumWriter w(os);
    w.bytes(kCheckpointMagic, 4);
    w.u16(kCheckpointVersion);

    const ModelSpec& spec = model.spec();
    w.u16(static_cast<std::uint16_t>(spec.kind));
    w.u64(spec.input_dim);
    w.u64(spec.output_dim);
    w.u64(spec.h_dim);
    w.f64(spec.gates.beta);
    w.f64(spec.gates.gamma);
    w.f64(spec.gates.zeta);
    w.f64(spec.gates.lambda);
    w.u16(spec.granularity == GateGranularity::per_input_row ? 0 : 1);
    w.f64(spec.droprate_init);
    w.u16(spec.library ? 1 : 0);
    if (spec.library) detail::write_library(w, *spec.library);
    w.u64(model.seed());

    std::vector<ParamView> params = model.parameters();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const ParamView& p : params) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.bytes(p.name.data(), p.name.size());
        w.u64(p.value.size());
        for (double v : p.value) w.f64(v);
    }
    w.finish_crc();
    if (!w.good()) throw DataFormatError(DataError::io, path + ": write failed");
}

inline Model load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError(DataError::io, path + ": cannot open for reading");
    detail::ChecksumReader r(is, path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw DataFormatError(DataError::bad_magic, path + ": bad magic");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw DataFormatError(DataError::bad_version,
                              path + ": unsupported version " + std::to_string(version));

    ModelSpec spec;
    const std::uint16_t kind = r.u16();
    if (kind > 2) throw DataFormatError(DataError::bad_schema, path + ": bad model kind");
    spec.kind = static_cast<ModelKind>(kind);
    spec.input_dim = r.u64();
    spec.output_dim = r.u64();
    spec.h_dim = r.u64();
    spec.gates.beta = r.f64();
    spec.gates.gamma = r.f64();
    spec.gates.zeta = r.f64();
    spec.gates.lambda = r.f64();
    spec.granularity = r.u16() == 0 ? GateGranularity::per_input_row : GateGranularity::per_element;
    spec.droprate_init = r.f64();
    if (r.u16() != 0) spec.library = detail::read_library(r, path);
    const std::uint64_t seed = r.u64();

    // A corrupted header can decode into an invalid spec before the checksum
    // is reachable; surface that as a format error.
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw DataFormatError(DataError::bad_schema, path + ": " + e.what());
    }
    Model model(spec, seed);
    std::vector<ParamView> params = model.parameters();
    const std::uint32_t n_tensors = r.u32();
    if (n_tensors != params.size())
        throw DataFormatError(DataError::bad_schema, path + ": tensor count mismatch");
    for (ParamView& p : params) {
        const std::uint32_t name_len = r.u32();
        std::string name(name_len, '\0');
        r.bytes(name.data(), name_len);
        if (name != p.name)
            throw DataFormatError(DataError::bad_schema, path + ": tensor name mismatch: " + name);
        const std::uint64_t len = r.u64();
        if (len != p.value.size())
            throw DataFormatError(DataError::bad_schema, path + ": tensor size mismatch: " + name);
        for (double& v : p.value) v = r.f64();
    }
    r.verify_crc();
    return model;
}

// JSON sidecar with the sparsity counts and, for dictionary models, the
// extracted equations.
inline void write_model_sidecar(const Model& model, const std::string& ckpt_path) {
    nlohmann::json j;
    j["model"] = to_string(model.spec().kind);
    j["seed"] = model.seed();
    j["input_dim"] = model.spec().input_dim;
    j["output_dim"] = model.spec().output_dim;
    if (model.spec().kind != ModelKind::fcnn) {
        const SparsityCounts counts = model.sparsity_counts();
        j["sparsity"] = {{"total_gates", counts.total_gates},
                         {"active_gates", counts.active_gates},
                         {"active_parameters", counts.active_parameters},
                         {"total_parameters", counts.total_parameters}};
    }
    if (model.spec().kind == ModelKind::l0_sindy) {
        nlohmann::json eqs = nlohmann::json::array();
        const std::vector<Equation> equations = model.extract_equations();
        for (std::size_t o = 0; o < equations.size(); ++o) {
            nlohmann::json terms = nlohmann::json::array();
            for (const EquationTerm& t : equations[o].terms)
                terms.push_back({{"feature", model.feature_map().names[t.feature]},
                                 {"coefficient", t.coefficient}});
            eqs.push_back({{"output", o}, {"text", equations[o].text}, {"terms", terms}});
        }
        j["equations"] = eqs;
    }
    std::ofstream os(ckpt_path + ".json");
    if (!os) throw DataFormatError(DataError::io, ckpt_path + ".json: cannot open for writing");
    os << j.dump(2) << "\n";
}

}  // namespace l0sparse
