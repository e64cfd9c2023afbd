#include "ocrbench/math.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "ocrbench/render.hpp"
#include "ocrbench/unicode.hpp"

namespace ocrbench {
namespace {

// Visually indistinguishable glyph variants, folded to one representative.
constexpr std::pair<char32_t, char32_t> kGlyphEquivalences[] = {
    {0x2212, U'-'},  // minus sign
    {0x2010, U'-'},  // hyphen
    {0x2011, U'-'},  // non-breaking hyphen
    {0x2013, U'-'},  // en dash
    {0x2032, U'\''}, // prime
    {0x2019, U'\''}, // right single quotation mark
    {0x2217, U'*'},  // asterisk operator
    {0x2223, U'|'},  // divides
    {0x2236, U':'},  // ratio
    {0x2215, U'/'},  // division slash
    {0x00B7, 0x22C5},// middle dot / dot operator
};

}  // namespace

std::string canonical_glyph(std::string_view glyph) {
  auto text = to_u32(to_nfc(glyph));
  for (auto& cp : text) {
    for (const auto& [from, to] : kGlyphEquivalences) {
      if (cp == from) {
        cp = to;
        break;
      }
    }
  }
  return to_utf8(text);
}

double default_tolerance(const SymbolLayout& layout, double fraction) {
  if (layout.symbols.empty()) return 1.0;
  std::vector<double> heights;
  heights.reserve(layout.symbols.size());
  for (const auto& s : layout.symbols) heights.push_back(s.height());
  const auto mid = heights.begin() + static_cast<std::ptrdiff_t>(heights.size() / 2);
  std::nth_element(heights.begin(), mid, heights.end());
  double median = *mid;
  if (heights.size() % 2 == 0) {
    median = (median + *std::max_element(heights.begin(), mid)) / 2;
  }
  return median > 0 ? fraction * median : 1.0;
}

RelationGraph relation_graph(const SymbolLayout& layout, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("relation tolerance must be positive");
  RelationGraph graph;
  const auto& symbols = layout.symbols;
  for (const auto& s : symbols) graph.glyphs.push_back(canonical_glyph(s.glyph));
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (std::size_t j = 0; j < symbols.size(); ++j) {
      if (i == j) continue;
      if (symbols[i].center_x() + tau < symbols[j].center_x()) graph.edges.push_back({i, j, Relation::kLeftOf});
      if (symbols[i].center_y() + tau < symbols[j].center_y()) graph.edges.push_back({i, j, Relation::kAbove});
    }
  }
  return graph;
}

namespace {

class FormulaSearch {
 public:
  FormulaSearch(const SymbolLayout& reference, const SymbolLayout& candidate, double tau, std::uint64_t budget)
      : ref_(reference.symbols), cand_(candidate.symbols), tau_(tau), budget_(budget) {
    const std::size_t n = ref_.size();
    left_of_.assign(n * n, false);
    above_.assign(n * n, false);
    for (const auto& edge : relation_graph(reference, tau).edges) {
      (edge.relation == Relation::kLeftOf ? left_of_ : above_)[edge.from * n + edge.to] = true;
    }
    std::map<std::string, std::vector<std::size_t>> by_glyph;
    for (std::size_t p = 0; p < cand_.size(); ++p) by_glyph[canonical_glyph(cand_[p].glyph)].push_back(p);
    options_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (const auto it = by_glyph.find(canonical_glyph(ref_[i].glyph)); it != by_glyph.end()) {
        options_[i] = it->second;
      }
    }
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    std::stable_sort(order_.begin(), order_.end(),
                     [this](std::size_t a, std::size_t b) { return options_[a].size() < options_[b].size(); });
  }

  FormulaMatch run() {
    FormulaMatch result;
    const std::size_t n = ref_.size();
    mapping_.assign(n, 0);
    used_.assign(cand_.size(), false);
    // Not enough candidate symbols of some glyph: no injective map exists.
    std::map<std::string, std::size_t> needed;
    for (const auto& s : ref_) ++needed[canonical_glyph(s.glyph)];
    for (std::size_t i = 0; i < n; ++i) {
      if (options_[i].size() < needed[canonical_glyph(ref_[i].glyph)]) {
        result.expansions = 0;
        return result;
      }
    }
    result.matched = n > 0 && search(0);
    result.budget_exhausted = exhausted_;
    result.expansions = expansions_;
    if (result.matched) result.mapping = mapping_;
    return result;
  }

 private:
  bool consistent(std::size_t i, std::size_t p, std::size_t depth) const {
    const std::size_t n = ref_.size();
    const auto& cp = cand_[p];
    for (std::size_t d = 0; d < depth; ++d) {
      const std::size_t k = order_[d];
      const auto& cq = cand_[mapping_[k]];
      if (left_of_[i * n + k] && !(cp.center_x() + tau_ < cq.center_x())) return false;
      if (left_of_[k * n + i] && !(cq.center_x() + tau_ < cp.center_x())) return false;
      if (above_[i * n + k] && !(cp.center_y() + tau_ < cq.center_y())) return false;
      if (above_[k * n + i] && !(cq.center_y() + tau_ < cp.center_y())) return false;
    }
    return true;
  }

  bool search(std::size_t depth) {
    if (depth == order_.size()) return true;
    const std::size_t i = order_[depth];
    for (const std::size_t p : options_[i]) {
      if (used_[p]) continue;
      if (++expansions_ > budget_) {
        exhausted_ = true;
        return false;
      }
      if (!consistent(i, p, depth)) continue;
      used_[p] = true;
      mapping_[i] = p;
      if (search(depth + 1)) return true;
      used_[p] = false;
      if (exhausted_) return false;
    }
    return false;
  }

  const std::vector<SymbolBox>& ref_;
  const std::vector<SymbolBox>& cand_;
  double tau_;
  std::uint64_t budget_;
  std::vector<bool> left_of_;
  std::vector<bool> above_;
  std::vector<std::vector<std::size_t>> options_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> mapping_;
  std::vector<bool> used_;
  std::uint64_t expansions_ = 0;
  bool exhausted_ = false;
};

}  // namespace

FormulaMatch match_formula_detailed(const SymbolLayout& reference, const SymbolLayout& candidate, double tau,
                                    std::uint64_t budget) {
  return FormulaSearch(reference, candidate, tau, budget).run();
}

bool match_formula(const SymbolLayout& reference, const SymbolLayout& candidate, double tau) {
  return match_formula_detailed(reference, candidate, tau).matched;
}

std::vector<std::string> extract_candidate_equations(std::string_view raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  const auto emit = [&](std::string_view body) {
    const auto first = body.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return;
    const auto last = body.find_last_not_of(" \t\r\n");
    std::string eq(body.substr(first, last - first + 1));
    if (seen.insert(eq).second) out.push_back(std::move(eq));
  };
  // Returns the position of the closing delimiter, skipping escaped chars.
  const auto find_close = [&raw](std::size_t from, std::string_view delim) {
    for (std::size_t k = from; k + delim.size() <= raw.size(); ++k) {
      if (raw[k] == '\\' && delim != "\\)" && delim != "\\]") {
        ++k;
        continue;
      }
      if (raw.substr(k, delim.size()) == delim) return k;
    }
    return std::string_view::npos;
  };

  std::size_t i = 0;
  while (i < raw.size()) {
    const auto rest = raw.substr(i);
    if (rest.starts_with("```") || rest.starts_with("~~~")) {
      const auto close = raw.find(rest.substr(0, 3), i + 3);
      i = close == std::string_view::npos ? raw.size() : close + 3;
    } else if (rest.starts_with("`")) {
      const auto close = raw.find('`', i + 1);
      i = close == std::string_view::npos ? i + 1 : close + 1;
    } else if (rest.starts_with("\\(") || rest.starts_with("\\[")) {
      const std::string_view delim = rest[1] == '(' ? "\\)" : "\\]";
      const auto close = find_close(i + 2, delim);
      if (close == std::string_view::npos) {
        i += 2;
        continue;
      }
      emit(raw.substr(i + 2, close - i - 2));
      i = close + 2;
    } else if (rest.starts_with("\\")) {
      i += 2;  // escaped character, e.g. "\$"
    } else if (rest.starts_with("$$")) {
      const auto close = find_close(i + 2, "$$");
      if (close == std::string_view::npos) {
        i += 2;
        continue;
      }
      emit(raw.substr(i + 2, close - i - 2));
      i = close + 2;
    } else if (rest.starts_with("$")) {
      const auto close = find_close(i + 1, "$");
      if (close == std::string_view::npos) {
        ++i;
        continue;
      }
      emit(raw.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      ++i;
    }
  }
  return out;
}

MatchResult check_math(const TestCase& test, const CandidateDocument& doc, Renderer& renderer,
                       const MathOptions& options) {
  MatchResult result;
  if (!test.math || test.math->empty()) {
    result.errored = true;
    result.explanation = "math test without reference equation";
    return result;
  }
  const auto candidates = extract_candidate_equations(doc.raw);
  std::vector<RenderRequest> requests;
  requests.reserve(candidates.size() + 1);
  requests.push_back({"ref", *test.math, true});
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    requests.push_back({"c" + std::to_string(k), candidates[k], true});
  }

  std::vector<RenderResponse> responses;
  try {
    responses = renderer.render_batch(requests);
  } catch (const RendererUnavailable& e) {
    result.errored = true;
    result.explanation = std::string("renderer unavailable: ") + e.what();
    return result;
  }
  if (responses.size() != requests.size()) {
    result.errored = true;
    result.explanation = "renderer returned an incomplete batch";
    return result;
  }
  const auto& ref = responses.front();
  if (!ref.ok || ref.symbols.empty()) {
    result.errored = true;
    result.explanation = "reference failed to render: " + (ref.ok ? std::string("no symbols") : ref.error);
    return result;
  }
  const SymbolLayout reference{ref.symbols, *test.math};
  const double tau = default_tolerance(reference, options.tolerance_fraction);

  std::size_t rendered = 0;
  bool exhausted = false;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& response = responses[k + 1];
    if (!response.ok) continue;
    ++rendered;
    const auto match = match_formula_detailed(reference, {response.symbols, candidates[k]}, tau,
                                              options.expansion_budget);
    exhausted = exhausted || match.budget_exhausted;
    if (match.matched) {
      result.passed = true;
      result.explanation = "matched candidate equation " + std::to_string(k);
      return result;
    }
  }
  result.explanation = "no matching equation among " + std::to_string(rendered) + " rendered of " +
                       std::to_string(candidates.size()) + " candidates";
  if (exhausted) result.explanation += " (search budget exhausted)";
  return result;
}

}  // namespace ocrbench
