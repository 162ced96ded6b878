#pragma once

#include <iosfwd>
#include <string>

#include "ontopath/params.hpp"
#include "ontopath/train.hpp"

namespace ontopath {

inline constexpr char kCheckpointMagic[8] = {'O', 'N', 'T', 'O', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary parameter container:
///   magic[8] | u32 version | u32 scalar bytes | u64 count |
///   count x (u32 name length | name | u32 rank | u64 dims[rank] | values)
/// with every integer and value little-endian.
template <typename Scalar>
void write_params(std::ostream& out, const ParamStore<Scalar>& store);
template <typename Scalar>
ParamStore<Scalar> read_params(std::istream& in);

/// Writes `path` (parameters) and `path.json` (config and vocabularies).
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ontopath
