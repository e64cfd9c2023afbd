#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ocrbench/corpus.hpp"
#include "ocrbench/fuzzy.hpp"

namespace ocrbench {

class Renderer;

/// One rendered glyph. Render-space pixels, y grows downward.
struct SymbolBox {
  std::string glyph;
  double x0 = 0;
  double y0 = 0;
  double x1 = 0;
  double y1 = 0;

  double center_x() const { return (x0 + x1) / 2; }
  double center_y() const { return (y0 + y1) / 2; }
  double height() const { return y1 - y0; }

  friend bool operator==(const SymbolBox&, const SymbolBox&) = default;
};

struct SymbolLayout {
  std::vector<SymbolBox> symbols;
  std::string source;  // LaTeX it was rendered from
};

enum class Relation : std::uint8_t { kLeftOf, kAbove };

struct RelationEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  Relation relation = Relation::kLeftOf;

  friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
};

/// Directed left-of/above edges between symbols whose centers differ by more
/// than the tolerance along the corresponding axis. Right-of and below are
/// the converse edges and are not stored.
struct RelationGraph {
  std::vector<std::string> glyphs;
  std::vector<RelationEdge> edges;
};

/// Glyph used for comparisons: NFC, with visually identical variants folded
/// (U+2212 and hyphen-minus, prime and apostrophe, ...).
std::string canonical_glyph(std::string_view glyph);

/// `fraction` of the median symbol height; 1.0 for an empty layout.
double default_tolerance(const SymbolLayout& layout, double fraction = 0.25);

/// Throws std::invalid_argument unless tau > 0.
RelationGraph relation_graph(const SymbolLayout& layout, double tau);

inline constexpr std::uint64_t kDefaultExpansionBudget = 1'000'000;

struct FormulaMatch {
  bool matched = false;
  bool budget_exhausted = false;
  std::uint64_t expansions = 0;
  /// mapping[i] is the candidate index of reference symbol i when matched.
  std::vector<std::size_t> mapping;
};

/// Searches for an injective, glyph-preserving map from reference symbols to
/// candidate symbols under which every reference edge also holds between the
/// mapped candidate symbols. Backtracking visits the rarest glyphs first.
FormulaMatch match_formula_detailed(const SymbolLayout& reference, const SymbolLayout& candidate, double tau,
                                    std::uint64_t budget = kDefaultExpansionBudget);

bool match_formula(const SymbolLayout& reference, const SymbolLayout& candidate, double tau);

/// Contents of `$$..$$`, `$..$`, `\(..\)` and `\[..\]` spans outside code
/// fences and inline code, trimmed, deduplicated, in order of appearance.
std::vector<std::string> extract_candidate_equations(std::string_view raw);

struct MathOptions {
  /// Tolerance as a fraction of the reference's median symbol height.
  double tolerance_fraction = 0.25;
  std::uint64_t expansion_budget = kDefaultExpansionBudget;
};

/// Renders the reference and every candidate equation, passing if any
/// candidate matches. A reference that cannot be rendered, or a renderer that
/// is unavailable, yields an errored result rather than a failure.
MatchResult check_math(const TestCase& test, const CandidateDocument& doc, Renderer& renderer,
                       const MathOptions& options = {});

}  // namespace ocrbench
