#include "momcert/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "momcert/error.hpp"

namespace momcert {

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidInput, "cannot open " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidInput, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string format_double(double v) {
  char buf[40];
  for (int prec : {15, 16, 17}) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace momcert
