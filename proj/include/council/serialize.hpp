#pragma once

#include <fstream>

#include "council/data.hpp"
#include "council/losses.hpp"

namespace council {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace io {

inline void write_u64(std::ostream& os, uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_string(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void write_tensor(std::ostream& os, const Tensor& t) {
    write_u64(os, t.ndim());
    for (int64_t d : t.shape()) write_u64(os, static_cast<uint64_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(real)));
}

inline uint64_t read_u64(std::istream& is) {
    uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw CheckpointError("truncated checkpoint");
    return v;
}
inline double read_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw CheckpointError("truncated checkpoint");
    return v;
}
inline std::string read_string(std::istream& is) {
    uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw CheckpointError("truncated checkpoint");
    return s;
}
inline Tensor read_tensor(std::istream& is) {
    uint64_t nd = read_u64(is);
    std::vector<int64_t> shape;
    for (uint64_t i = 0; i < nd; ++i) shape.push_back(static_cast<int64_t>(read_u64(is)));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(real)));
    if (!is) throw CheckpointError("truncated checkpoint");
    return t;
}

inline void write_stream_state(std::ostream& os, const StreamState& s) {
    write_string(os, s.rng);
    write_u64(os, s.perm.size());
    for (int64_t v : s.perm) write_u64(os, static_cast<uint64_t>(v));
    write_u64(os, static_cast<uint64_t>(s.cursor));
    write_u64(os, static_cast<uint64_t>(s.count));
}
inline StreamState read_stream_state(std::istream& is) {
    StreamState s;
    s.rng = read_string(is);
    uint64_t n = read_u64(is);
    for (uint64_t i = 0; i < n; ++i) s.perm.push_back(static_cast<int64_t>(read_u64(is)));
    s.cursor = static_cast<int64_t>(read_u64(is));
    s.count = static_cast<int64_t>(read_u64(is));
    return s;
}

} // namespace io

namespace detail {

inline void write_store(std::ostream& os, const ParamStore& ps, const Adam& opt) {
    io::write_u64(os, ps.params().size());
    for (const auto& p : ps.params()) io::write_tensor(os, p.value());
    io::write_u64(os, static_cast<uint64_t>(opt.step_count()));
    for (const auto& t : opt.moment1()) io::write_tensor(os, t);
    for (const auto& t : opt.moment2()) io::write_tensor(os, t);
}

inline void read_store(std::istream& is, ParamStore& ps, Adam& opt) {
    uint64_t n = io::read_u64(is);
    if (n != ps.params().size())
        throw CheckpointError("checkpoint parameter count mismatch");
    for (auto& p : ps.params()) {
        Tensor t = io::read_tensor(is);
        if (!t.same_shape(p.value()))
            throw CheckpointError("checkpoint parameter shape mismatch: " +
                                  Tensor::shape_str(t.shape()) + " vs " +
                                  Tensor::shape_str(p.value().shape()));
        p.value_mut() = std::move(t);
    }
    opt.set_step_count(static_cast<int64_t>(io::read_u64(is)));
    for (auto& t : opt.moment1()) t = io::read_tensor(is);
    for (auto& t : opt.moment2()) t = io::read_tensor(is);
}

// Fields that fix network shapes; loading a checkpoint under a config that
// disagrees on any of them is an error.
inline std::string arch_signature(const CouncilConfig& c) {
    std::ostringstream os;
    os << c.n_members << "|" << c.image_size << "|" << c.base_channels << "|"
       << c.n_downsample << "|" << c.n_res_blocks << "|" << c.mlp_hidden << "|"
       << c.entropy_dim << "|" << c.disc_base_channels << "|" << c.disc_layers << "|"
       << c.disc_scales << "|" << c.focus_enabled;
    return os.str();
}

} // namespace detail

inline void save_member(std::ostream& os, const CouncilMember& m, const CouncilConfig& cfg,
                        int64_t iteration, int64_t member_index) {
    os.write("CNCLMB01", 8);
    io::write_string(os, cfg.serialize());
    io::write_u64(os, static_cast<uint64_t>(iteration));
    io::write_u64(os, static_cast<uint64_t>(member_index));
    detail::write_store(os, m.gen_params(), const_cast<CouncilMember&>(m).gen_opt());
    detail::write_store(os, m.gan_disc_params(), const_cast<CouncilMember&>(m).gan_opt());
    detail::write_store(os, m.council_disc_params(), const_cast<CouncilMember&>(m).council_opt());
}

// Returns the config snapshot stored in the archive.
inline CouncilConfig load_member(std::istream& is, CouncilMember& m,
                                 const CouncilConfig& expected_cfg) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "CNCLMB01")
        throw CheckpointError("not a council member checkpoint");
    std::istringstream cfg_in(io::read_string(is));
    CouncilConfig stored = CouncilConfig::parse(cfg_in);
    if (detail::arch_signature(stored) != detail::arch_signature(expected_cfg))
        throw CheckpointError("checkpoint/config incompatibility: stored architecture [" +
                              detail::arch_signature(stored) + "] vs current [" +
                              detail::arch_signature(expected_cfg) + "]");
    io::read_u64(is); // iteration (authoritative copy lives in the trainer archive)
    io::read_u64(is); // member index
    detail::read_store(is, m.gen_params(), m.gen_opt());
    detail::read_store(is, m.gan_disc_params(), m.gan_opt());
    detail::read_store(is, m.council_disc_params(), m.council_opt());
    return stored;
}

} // namespace council
