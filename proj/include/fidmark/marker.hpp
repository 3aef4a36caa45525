#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fidmark/image.hpp"

namespace fidmark {

/// Radii of the printed bands as fractions of the outer radius.
struct MarkerGeometry {
  double inner_white = 0.42;  // white disc ends here
  double teeth_outer = 0.75;  // tooth band is [inner_white, teeth_outer]

  double teeth_mid() const { return 0.5 * (inner_white + teeth_outer); }
  void validate() const;
};

struct MarkerSpec {
  std::uint32_t id = 0;
  int id_bits = 8;
  double diameter = 0.3;  // outer black ring diameter, metres
  MarkerGeometry geometry;

  double radius() const { return 0.5 * diameter; }
  void validate() const;
};

/// One Manchester cell of the ID ring; angles in the marker plane,
/// counter-clockwise from the marker x axis.
struct ToothCell {
  bool white = false;
  double start = 0.0;
  double end = 0.0;
};

struct ToothPattern {
  int id_bits = 0;
  std::vector<ToothCell> cells;  // 2 * id_bits cells tiling [0, 2pi)

  double cell_width() const;
  bool white_at(double angle) const;
};

struct Necklace {
  std::uint32_t id = 0;  // minimal cyclic rotation
  int offset = 0;        // id == rotate_right(bits, offset)
};

std::uint32_t rotate_right(std::uint32_t bits, int count, int id_bits);
Necklace canonicalize_necklace(std::uint32_t bits, int id_bits);
bool is_canonical(std::uint32_t id, int id_bits);
/// All canonical ids for the given width, ascending.
std::vector<std::uint32_t> necklace_codebook(int id_bits);
std::string bit_string(std::uint32_t bits, int id_bits);

/// Bit i of the id (most significant first) occupies cells 2i and 2i+1:
/// a one is (white, black), a zero is (black, white).
ToothPattern encode_id(std::uint32_t id, int id_bits);

struct RingDecode {
  std::uint32_t id = 0;
  double phase = 0.0;  // angle at which the first bit of the canonical id starts
};

/// Decodes uniformly spaced ring samples (true = white). Returns nullopt when
/// the Manchester structure is violated.
std::optional<RingDecode> decode_ring(std::span<const std::uint8_t> samples, int id_bits);

/// Printed surface at marker-plane coordinates (metres from the center).
enum class Surface { kWhite, kBlack, kOutside };
Surface marker_surface(const MarkerSpec& spec, const ToothPattern& pattern, double x, double y,
                       double paper_half_side);

/// Frontal raster: white background, outer diameter = size / 1.25.
GrayImage render_marker_bitmap(const MarkerSpec& spec, int size);

/// Square-tag family figures used only as report constants.
struct AprilFamilyStats {
  std::string_view name;
  int defined_squares;
  int data_bits;
  int codebook_size;
  std::string_view memory_class;
};

inline constexpr AprilFamilyStats kApril48h12{"tagCustom48h12", 96, 48, 42211, "over 1 GB hash table"};
inline constexpr AprilFamilyStats kApril24h10{"tagCustom24h10", 48, 24, 18, "small hash table"};

}  // namespace fidmark
