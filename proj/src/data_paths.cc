#include "featgap/data_paths.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "featgap/error.h"

#ifndef FEATGAP_DEFAULT_DATA_DIR
#define FEATGAP_DEFAULT_DATA_DIR "data"
#endif

namespace featgap {

std::filesystem::path DataDir() {
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env) {
    return env;
  }
  return FEATGAP_DEFAULT_DATA_DIR;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace featgap
