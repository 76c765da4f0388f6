#include "gkhybrid/problems.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gkh {

static_assert(std::endian::native == std::endian::little,
              "instance serialization assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'K', 'H', 'B'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("read_instance: truncated stream");
  return v;
}

void put_vector(std::ostream& out, const Vector& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Vector get_vector(std::istream& in, Index n) {
  Vector v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("read_instance: truncated stream");
  return v;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_instance(std::ostream& out, const ProblemInstance& inst) {
  const auto m = static_cast<std::uint64_t>(inst.d.size());
  const auto n = static_cast<std::uint64_t>(inst.s_true.size());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kInstanceFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(inst.kind));
  put<std::uint64_t>(out, m);
  put<std::uint64_t>(out, n);
  put<std::uint64_t>(out, inst.seed);
  put<double>(out, inst.noise_level);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(inst.geometry.dims));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(inst.geometry.shape[0]));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(inst.geometry.shape[1]));
  put<double>(out, inst.geometry.spacing[0]);
  put<double>(out, inst.geometry.spacing[1]);
  put_vector(out, inst.s_true);
  put_vector(out, inst.d_clean);
  put_vector(out, inst.d);
  put_vector(out, inst.R.diag());
  if (!out) throw std::runtime_error("write_instance: stream error");
}

void write_instance(const std::string& path, const ProblemInstance& inst) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_instance: cannot open " + path);
  write_instance(out, inst);
}

InstanceData read_instance(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("read_instance: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kInstanceFormatVersion) {
    throw std::runtime_error("read_instance: unsupported version " + std::to_string(version));
  }
  InstanceData d;
  const auto kind = get<std::uint32_t>(in);
  if (kind > static_cast<std::uint32_t>(ProblemKind::superres)) throw std::runtime_error("read_instance: bad kind");
  d.kind = static_cast<ProblemKind>(kind);
  const auto m = static_cast<Index>(get<std::uint64_t>(in));
  const auto n = static_cast<Index>(get<std::uint64_t>(in));
  d.seed = get<std::uint64_t>(in);
  d.noise_level = get<double>(in);
  d.geometry.dims = static_cast<int>(get<std::uint32_t>(in));
  d.geometry.shape[0] = static_cast<Index>(get<std::uint64_t>(in));
  d.geometry.shape[1] = static_cast<Index>(get<std::uint64_t>(in));
  d.geometry.spacing[0] = get<double>(in);
  d.geometry.spacing[1] = get<double>(in);
  d.s_true = get_vector(in, n);
  d.d_clean = get_vector(in, m);
  d.d = get_vector(in, m);
  d.r_diag = get_vector(in, m);
  return d;
}

InstanceData read_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_instance: cannot open " + path);
  return read_instance(in);
}

void write_instance_csv(std::ostream& out, const ProblemInstance& inst) {
  out << "# model\nindex,s_true\n";
  for (Index i = 0; i < inst.s_true.size(); ++i) out << i << ',' << fmt(inst.s_true(i)) << '\n';
  out << "# data\nindex,d_clean,d,r\n";
  for (Index i = 0; i < inst.d.size(); ++i) {
    out << i << ',' << fmt(inst.d_clean(i)) << ',' << fmt(inst.d(i)) << ',' << fmt(inst.R.diag()(i))
        << '\n';
  }
}

PgmScaling write_pgm(const std::string& path, const Vector& values, Index side0, Index side1) {
  if (values.size() != side0 * side1) throw std::invalid_argument("write_pgm: size mismatch");
  PgmScaling sc{values.minCoeff(), values.maxCoeff()};
  const double span = sc.max - sc.min;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
  // Axis 0 runs down the rows, axis 1 across the columns.
  out << "P5\n" << side1 << ' ' << side0 << "\n255\n";
  for (Index i0 = 0; i0 < side0; ++i0) {
    for (Index i1 = 0; i1 < side1; ++i1) {
      const double v = values(i0 + side0 * i1);
      const double t = span > 0.0 ? (v - sc.min) / span : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0))));
    }
  }
  if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
  std::ofstream side(path + ".txt");
  side << "width=" << side1 << "\nheight=" << side0 << "\nmin=" << fmt(sc.min) << "\nmax=" << fmt(sc.max)
       << "\nmapping=linear\n";
  return sc;
}

namespace {

void skip_pgm_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

Vector read_pgm(const std::string& path, Index* side0, Index* side1) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") throw std::runtime_error("read_pgm: not a PGM file: " + path);
  long w = 0, h = 0, maxval = 0;
  skip_pgm_space(in);
  in >> w;
  skip_pgm_space(in);
  in >> h;
  skip_pgm_space(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw std::runtime_error("read_pgm: bad header in " + path);
  }
  Vector img(w * h);
  if (magic == "P5") {
    in.get();
    const int bytes = maxval > 255 ? 2 : 1;
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        int v = in.get();
        if (bytes == 2) v = (v << 8) | in.get();
        if (!in) throw std::runtime_error("read_pgm: truncated pixel data in " + path);
        img(r + h * c) = static_cast<double>(v) / static_cast<double>(maxval);
      }
    }
  } else {
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        long v = 0;
        skip_pgm_space(in);
        in >> v;
        if (!in) throw std::runtime_error("read_pgm: truncated pixel data in " + path);
        img(r + h * c) = static_cast<double>(v) / static_cast<double>(maxval);
      }
    }
  }
  if (side0) *side0 = h;
  if (side1) *side1 = w;
  return img;
}

}  // namespace gkh
