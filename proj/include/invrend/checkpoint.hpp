#pragma once

#include <stdexcept>
#include <string>

#include "invrend/config.hpp"
#include "invrend/fields.hpp"
#include "invrend/optim.hpp"

namespace invrend {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Snapshot {
    Config config;
    std::size_t step = 0;
    std::vector<std::string> names;
    std::vector<Tensor> params, adam_m, adam_v;
    std::size_t adam_steps = 0;
};

/// Layout: 8-byte magic, u32 version, u64 header length, JSON header (config,
/// step, parameter names and shapes), then raw little-endian f64 arrays for
/// parameters, first moments and second moments.
std::string encode_snapshot(const Snapshot& s);
Snapshot decode_snapshot(const std::string& bytes);
void save_checkpoint(const std::string& path, const Snapshot& s);
Snapshot load_checkpoint(const std::string& path);

Snapshot make_snapshot(const Config& config, std::size_t step, const Fields& fields, const Adam& adam);
/// Rebuilds the fields from the stored config and copies the parameters in.
Fields restore_fields(const Snapshot& s);
Adam restore_adam(const Snapshot& s);

}  // namespace invrend
