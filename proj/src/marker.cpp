#include "fidmark/marker.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fidmark/error.hpp"

namespace fidmark {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_bits(int id_bits) {
  if (id_bits < 1 || id_bits > 32) throw Error("id_bits must be in [1, 32]");
}

std::uint32_t mask_for(int id_bits) {
  return id_bits == 32 ? 0xFFFFFFFFu : ((1u << id_bits) - 1u);
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

}  // namespace

void MarkerGeometry::validate() const {
  if (!(inner_white > 0.0 && inner_white < teeth_outer && teeth_outer < 1.0)) {
    throw Error("marker band radii must satisfy 0 < inner_white < teeth_outer < 1");
  }
}

void MarkerSpec::validate() const {
  check_bits(id_bits);
  geometry.validate();
  if (!(diameter > 0.0)) throw Error("marker diameter must be positive");
  if ((id & ~mask_for(id_bits)) != 0u) throw Error("marker id does not fit in id_bits");
}

double ToothPattern::cell_width() const { return kTwoPi / (2.0 * id_bits); }

bool ToothPattern::white_at(double angle) const {
  const double w = cell_width();
  auto index = static_cast<std::size_t>(wrap_angle(angle) / w);
  if (index >= cells.size()) index = cells.size() - 1;
  return cells[index].white;
}

std::uint32_t rotate_right(std::uint32_t bits, int count, int id_bits) {
  check_bits(id_bits);
  const std::uint32_t mask = mask_for(id_bits);
  bits &= mask;
  count %= id_bits;
  if (count < 0) count += id_bits;
  if (count == 0) return bits;
  return ((bits >> count) | (bits << (id_bits - count))) & mask;
}

Necklace canonicalize_necklace(std::uint32_t bits, int id_bits) {
  check_bits(id_bits);
  Necklace best{rotate_right(bits, 0, id_bits), 0};
  for (int k = 1; k < id_bits; ++k) {
    const std::uint32_t r = rotate_right(bits, k, id_bits);
    if (r < best.id) best = {r, k};
  }
  return best;
}

bool is_canonical(std::uint32_t id, int id_bits) {
  return (id & ~mask_for(id_bits)) == 0u && canonicalize_necklace(id, id_bits).id == id;
}

std::vector<std::uint32_t> necklace_codebook(int id_bits) {
  check_bits(id_bits);
  if (id_bits > 24) throw Error("codebook enumeration limited to 24 bits");
  std::vector<std::uint32_t> ids;
  for (std::uint32_t b = 0; b <= mask_for(id_bits); ++b) {
    if (is_canonical(b, id_bits)) ids.push_back(b);
  }
  return ids;
}

std::string bit_string(std::uint32_t bits, int id_bits) {
  std::string s(static_cast<std::size_t>(id_bits), '0');
  for (int i = 0; i < id_bits; ++i) {
    if ((bits >> (id_bits - 1 - i)) & 1u) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

ToothPattern encode_id(std::uint32_t id, int id_bits) {
  check_bits(id_bits);
  if ((id & ~mask_for(id_bits)) != 0u) throw Error("id does not fit in id_bits");
  const Necklace canon = canonicalize_necklace(id, id_bits);
  if (canon.id != id) {
    throw Error("id " + std::to_string(id) + " is not canonical; use " + std::to_string(canon.id));
  }
  ToothPattern pattern;
  pattern.id_bits = id_bits;
  const double w = pattern.cell_width();
  for (int i = 0; i < id_bits; ++i) {
    const bool one = (id >> (id_bits - 1 - i)) & 1u;
    const int c = 2 * i;
    pattern.cells.push_back({one, c * w, (c + 1) * w});
    pattern.cells.push_back({!one, (c + 1) * w, (c + 2) * w});
  }
  pattern.cells.back().end = kTwoPi;
  return pattern;
}

std::optional<RingDecode> decode_ring(std::span<const std::uint8_t> samples, int id_bits) {
  check_bits(id_bits);
  const int n = static_cast<int>(samples.size());
  const int cell_count = 2 * id_bits;
  if (n < 2 * cell_count) throw Error("too few ring samples for the id width");
  const double cell_len = static_cast<double>(n) / cell_count;

  // Circular majority filter removes isolated sample flips before run analysis.
  const int half = cell_len >= 8.0 ? 2 : (cell_len >= 4.0 ? 1 : 0);
  std::vector<std::uint8_t> filtered(samples.size());
  for (int i = 0; i < n; ++i) {
    int whites = 0;
    for (int k = -half; k <= half; ++k) whites += samples[((i + k) % n + n) % n] != 0;
    filtered[i] = 2 * whites > 2 * half + 1 ? 1 : 0;
  }

  // Run boundaries snap to a grid of cell_len; estimate its phase by a
  // circular mean of the boundary positions.
  double cs = 0.0, sn = 0.0;
  int transitions = 0;
  for (int i = 0; i < n; ++i) {
    if (filtered[i] != filtered[(i + n - 1) % n]) {
      const double pos = i - 0.5;
      cs += std::cos(kTwoPi * pos / cell_len);
      sn += std::sin(kTwoPi * pos / cell_len);
      ++transitions;
    }
  }
  if (transitions < 2) return std::nullopt;
  if (std::hypot(cs, sn) < 0.5 * transitions) return std::nullopt;
  double grid = std::atan2(sn, cs) / kTwoPi * cell_len;
  if (grid < 0.0) grid += cell_len;

  std::vector<bool> cells(static_cast<std::size_t>(cell_count));
  for (int c = 0; c < cell_count; ++c) {
    const double start = grid + c * cell_len;
    const double margin = 0.15 * cell_len;
    int white = 0, total = 0;
    for (int j = static_cast<int>(std::ceil(start + margin)); j <= static_cast<int>(std::floor(start + cell_len - margin)); ++j) {
      white += samples[((j % n) + n) % n] != 0;
      ++total;
    }
    if (2 * white == total) {
      const int mid = static_cast<int>(std::lround(start + 0.5 * cell_len));
      cells[static_cast<std::size_t>(c)] = filtered[((mid % n) + n) % n] != 0;
    } else {
      cells[static_cast<std::size_t>(c)] = 2 * white > total;
    }
  }

  auto pairing_valid = [&](int offset) {
    for (int j = 0; j < id_bits; ++j) {
      const auto a = static_cast<std::size_t>((offset + 2 * j) % cell_count);
      const auto b = static_cast<std::size_t>((offset + 2 * j + 1) % cell_count);
      if (cells[a] == cells[b]) return false;
    }
    return true;
  };
  const bool valid0 = pairing_valid(0), valid1 = pairing_valid(1);
  if (!valid0 && !valid1) return std::nullopt;
  int offset = valid0 ? 0 : 1;
  if (valid0 && valid1) {
    // Fully alternating ring: the all-zero and all-one ids are the same
    // physical pattern. Report the all-zero reading.
    offset = cells[0] ? 1 : 0;
  }

  std::uint32_t raw = 0;
  for (int j = 0; j < id_bits; ++j) {
    raw = (raw << 1) | (cells[static_cast<std::size_t>((offset + 2 * j) % cell_count)] ? 1u : 0u);
  }
  const Necklace canon = canonicalize_necklace(raw, id_bits);
  const int first_bit = (id_bits - canon.offset) % id_bits;
  const double pos = grid + (offset + 2 * first_bit) * cell_len;
  return RingDecode{canon.id, wrap_angle(kTwoPi * pos / n)};
}

Surface marker_surface(const MarkerSpec& spec, const ToothPattern& pattern, double x, double y,
                       double paper_half_side) {
  const double rho = std::hypot(x, y) / spec.radius();
  if (rho < spec.geometry.inner_white) return Surface::kWhite;
  if (rho < spec.geometry.teeth_outer) {
    return pattern.white_at(std::atan2(y, x)) ? Surface::kWhite : Surface::kBlack;
  }
  if (rho <= 1.0) return Surface::kBlack;
  if (std::abs(x) <= paper_half_side && std::abs(y) <= paper_half_side) return Surface::kWhite;
  return Surface::kOutside;
}

GrayImage render_marker_bitmap(const MarkerSpec& spec, int size) {
  spec.validate();
  if (size < 64) throw Error("marker bitmap size must be at least 64 px");
  const ToothPattern pattern = encode_id(spec.id, spec.id_bits);
  const double metres_per_px = spec.diameter / (size / 1.25);
  constexpr int kSub = 4;
  GrayImage img(size, size, 255);
  // Pixel centers sit at integer coordinates; the marker center at (size-1)/2.
  const double c = 0.5 * (size - 1);
  for (int py = 0; py < size; ++py) {
    for (int px = 0; px < size; ++px) {
      int white = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double x = (px - 0.5 + (sx + 0.5) / kSub - c) * metres_per_px;
          const double y = -(py - 0.5 + (sy + 0.5) / kSub - c) * metres_per_px;
          white += marker_surface(spec, pattern, x, y, 1e9) != Surface::kBlack;
        }
      }
      img.at(px, py) = static_cast<std::uint8_t>(std::lround(255.0 * white / (kSub * kSub)));
    }
  }
  return img;
}

}  // namespace fidmark
