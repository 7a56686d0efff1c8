#ifndef FEATGAP_DATA_PATHS_H_
#define FEATGAP_DATA_PATHS_H_

#include <filesystem>
#include <string>

namespace featgap {

inline constexpr const char* kDataDirEnv = "FEATGAP_DATA_DIR";

// $FEATGAP_DATA_DIR if set, else the data directory baked in at build time.
std::filesystem::path DataDir();

std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace featgap

#endif  // FEATGAP_DATA_PATHS_H_
