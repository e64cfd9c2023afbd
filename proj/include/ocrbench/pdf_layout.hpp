#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ocrbench/anchor.hpp"

namespace ocrbench {

class PdfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads positioned text and image placements straight from PDF content
/// streams. Handles classic and compressed object layouts, FlateDecode and
/// ASCIIHexDecode streams, ToUnicode CMaps, form XObjects and inline images.
/// Glyph widths are not modelled, so a block's position is where its first
/// string was shown.
class PdfLayoutReader {
 public:
  /// Throws PdfError when no page tree can be found.
  explicit PdfLayoutReader(std::string bytes);
  ~PdfLayoutReader();
  PdfLayoutReader(PdfLayoutReader&&) noexcept;
  PdfLayoutReader& operator=(PdfLayoutReader&&) noexcept;

  static PdfLayoutReader open(const std::filesystem::path& file);

  std::size_t page_count() const;

  /// `page` is 1-based. Coordinates are relative to the MediaBox origin.
  AnchorLayout layout(int page) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Convenience: a `.json` path is read as a layout sidecar, anything else as
/// a PDF.
AnchorLayout load_layout(const std::filesystem::path& file, int page);

}  // namespace ocrbench
