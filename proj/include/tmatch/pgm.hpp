#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tmatch/errors.hpp"
#include "tmatch/field.hpp"

namespace tmatch {

namespace detail {

inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) break;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return tok;
}

inline unsigned long pgm_number(std::istream& in, const char* what) {
  const std::string tok = pgm_token(in);
  if (tok.empty()) throw InputError(std::string("PGM: missing ") + what);
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch))) throw InputError(std::string("PGM: bad ") + what);
  return std::stoul(tok);
}

}  // namespace detail

/// Reads a binary (P5) 8- or 16-bit grayscale PGM. Intensities map to [0, 1]
/// by dividing by maxval; the top image row lands at y_max.
inline ScalarField read_pgm(const std::string& path, Domain domain = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("PGM: cannot open '" + path + "'");
  if (detail::pgm_token(in) != "P5") throw InputError("PGM: '" + path + "' is not a binary P5 file");
  const auto width = detail::pgm_number(in, "width");
  const auto height = detail::pgm_number(in, "height");
  const auto maxval = detail::pgm_number(in, "maxval");
  if (width == 0 || height == 0) throw InputError("PGM: zero image size");
  if (maxval == 0 || maxval > 65535) throw InputError("PGM: maxval out of range");
  const bool wide = maxval > 255;
  const std::size_t count = width * height * (wide ? 2 : 1);
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) throw InputError("PGM: truncated pixel data");

  ScalarField f(width, height, domain);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t k = r * width + c;
      const unsigned v = wide ? (static_cast<unsigned>(raw[2 * k]) << 8) | raw[2 * k + 1] : raw[k];
      f(c, height - 1 - r) = static_cast<double>(v) / static_cast<double>(maxval);
    }
  return f;
}

/// Writes a field as binary PGM, mapping [lo, hi] linearly onto [0, maxval].
inline void write_pgm(const ScalarField& f, const std::string& path, double lo = 0.0, double hi = 1.0,
                      bool sixteen_bit = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("PGM: cannot write '" + path + "'");
  const unsigned maxval = sixteen_bit ? 65535u : 255u;
  out << "P5\n" << f.nx() << ' ' << f.ny() << '\n' << maxval << '\n';
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t r = 0; r < f.ny(); ++r)
    for (std::size_t c = 0; c < f.nx(); ++c) {
      double u = (f(c, f.ny() - 1 - r) - lo) / span;
      u = std::clamp(u, 0.0, 1.0);
      const auto v = static_cast<unsigned>(std::lround(u * maxval));
      if (sixteen_bit) {
        out.put(static_cast<char>((v >> 8) & 0xFF));
        out.put(static_cast<char>(v & 0xFF));
      } else {
        out.put(static_cast<char>(v));
      }
    }
}

}  // namespace tmatch
