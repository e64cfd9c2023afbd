#include "ocrbench/pdf_layout.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include <zlib.h>

#include "ocrbench/unicode.hpp"

namespace ocrbench {
namespace {

// ---- object model --------------------------------------------------------

struct Object {
  enum class Kind { kNull, kBool, kNumber, kString, kName, kArray, kDict, kRef, kStream, kOperator };
  Kind kind = Kind::kNull;
  bool boolean = false;
  double number = 0;
  std::string text;  // string bytes, name, or operator
  std::vector<Object> items;
  std::vector<std::string> keys;  // dict keys, parallel to items
  int ref_num = 0;
  int ref_gen = 0;
  std::string stream;  // raw stream bytes

  bool is(Kind k) const { return kind == k; }
  bool is_dict() const { return kind == Kind::kDict || kind == Kind::kStream; }

  const Object* get(std::string_view key) const {
    if (!is_dict()) return nullptr;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (keys[i] == key) return &items[i];
    }
    return nullptr;
  }
};

const Object kNull;

bool is_pdf_space(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0'; }
bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == '<' || c == '>' || c == '[' || c == ']' || c == '{' || c == '}' || c == '/' ||
         c == '%';
}
int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string decode_hex(std::string_view hex) {
  std::string out;
  int high = -1;
  for (const char c : hex) {
    const int v = hex_value(c);
    if (v < 0) continue;
    if (high < 0) {
      high = v;
    } else {
      out.push_back(static_cast<char>(high * 16 + v));
      high = -1;
    }
  }
  if (high >= 0) out.push_back(static_cast<char>(high * 16));
  return out;
}

class Lexer {
 public:
  explicit Lexer(std::string_view data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  std::size_t pos() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  bool at_end() {
    skip_space();
    return pos_ >= data_.size();
  }

  void skip_space() {
    while (pos_ < data_.size()) {
      if (is_pdf_space(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '%') {
        while (pos_ < data_.size() && data_[pos_] != '\n' && data_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  // Parses one object. Within content streams, bare keywords come back as
  // kOperator; `R` references are folded when `allow_refs`.
  Object parse(bool allow_refs = true, int depth = 0) {
    if (depth > 64) throw PdfError("PDF object nesting too deep");
    skip_space();
    if (pos_ >= data_.size()) throw PdfError("unexpected end of PDF data");
    const char c = data_[pos_];
    Object obj;
    if (c == '/') {
      obj.kind = Object::Kind::kName;
      obj.text = name();
    } else if (c == '(') {
      obj.kind = Object::Kind::kString;
      obj.text = literal_string();
    } else if (c == '<' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '<') {
      pos_ += 2;
      obj.kind = Object::Kind::kDict;
      while (true) {
        skip_space();
        if (pos_ >= data_.size()) throw PdfError("unterminated dictionary");
        if (data_.compare(pos_, 2, ">>") == 0) {
          pos_ += 2;
          break;
        }
        if (data_[pos_] != '/') {
          // Tolerate junk by skipping one token.
          parse(allow_refs, depth + 1);
          continue;
        }
        auto key = name();
        obj.keys.push_back(std::move(key));
        obj.items.push_back(parse(allow_refs, depth + 1));
      }
    } else if (c == '<') {
      const auto close = data_.find('>', pos_);
      if (close == std::string_view::npos) throw PdfError("unterminated hex string");
      obj.kind = Object::Kind::kString;
      obj.text = decode_hex(data_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
    } else if (c == '[') {
      ++pos_;
      obj.kind = Object::Kind::kArray;
      while (true) {
        skip_space();
        if (pos_ >= data_.size()) throw PdfError("unterminated array");
        if (data_[pos_] == ']') {
          ++pos_;
          break;
        }
        obj.items.push_back(parse(allow_refs, depth + 1));
      }
    } else if (c == ']' || c == '>' || c == ')' || c == '{' || c == '}') {
      ++pos_;
      obj.kind = Object::Kind::kOperator;
      obj.text = std::string(1, c);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      obj.kind = Object::Kind::kNumber;
      obj.number = number();
      if (allow_refs) {
        const auto save = pos_;
        skip_space();
        if (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
          const double gen = number();
          skip_space();
          if (pos_ < data_.size() && data_[pos_] == 'R' &&
              (pos_ + 1 == data_.size() || is_pdf_space(data_[pos_ + 1]) || is_delimiter(data_[pos_ + 1]))) {
            ++pos_;
            obj.kind = Object::Kind::kRef;
            obj.ref_num = static_cast<int>(obj.number);
            obj.ref_gen = static_cast<int>(gen);
            return obj;
          }
        }
        pos_ = save;
      }
    } else {
      const auto word = keyword();
      if (word == "true" || word == "false") {
        obj.kind = Object::Kind::kBool;
        obj.boolean = word == "true";
      } else if (word == "null") {
        obj.kind = Object::Kind::kNull;
      } else {
        obj.kind = Object::Kind::kOperator;
        obj.text = word;
      }
    }
    return obj;
  }

  std::string keyword() {
    const auto start = pos_;
    while (pos_ < data_.size() && !is_pdf_space(data_[pos_]) && !is_delimiter(data_[pos_])) ++pos_;
    if (pos_ == start) ++pos_;  // lone delimiter
    return std::string(data_.substr(start, pos_ - start));
  }

 private:
  std::string name() {
    ++pos_;  // '/'
    std::string out;
    while (pos_ < data_.size() && !is_pdf_space(data_[pos_]) && !is_delimiter(data_[pos_])) {
      if (data_[pos_] == '#' && pos_ + 2 < data_.size() && hex_value(data_[pos_ + 1]) >= 0 &&
          hex_value(data_[pos_ + 2]) >= 0) {
        out.push_back(static_cast<char>(hex_value(data_[pos_ + 1]) * 16 + hex_value(data_[pos_ + 2])));
        pos_ += 3;
      } else {
        out.push_back(data_[pos_++]);
      }
    }
    return out;
  }

  double number() {
    const auto start = pos_;
    if (pos_ < data_.size() && (data_[pos_] == '-' || data_[pos_] == '+')) ++pos_;
    while (pos_ < data_.size() && (std::isdigit(static_cast<unsigned char>(data_[pos_])) || data_[pos_] == '.')) ++pos_;
    const std::string text(data_.substr(start, pos_ - start));
    // Some writers emit "--5" or a bare sign; treat those as 0.
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    return end == text.c_str() ? 0.0 : v;
  }

  std::string literal_string() {
    ++pos_;  // '('
    std::string out;
    int depth = 1;
    while (pos_ < data_.size()) {
      const char c = data_[pos_++];
      if (c == '\\') {
        if (pos_ >= data_.size()) break;
        const char e = data_[pos_++];
        switch (e) {
          case 'n':
            out.push_back('\n');
            break;
          case 'r':
            out.push_back('\r');
            break;
          case 't':
            out.push_back('\t');
            break;
          case 'b':
            out.push_back('\b');
            break;
          case 'f':
            out.push_back('\f');
            break;
          case '\r':
            if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
            break;
          case '\n':
            break;
          default:
            if (e >= '0' && e <= '7') {
              int v = e - '0';
              for (int k = 0; k < 2 && pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '7'; ++k) {
                v = v * 8 + (data_[pos_++] - '0');
              }
              out.push_back(static_cast<char>(v & 0xFF));
            } else {
              out.push_back(e);
            }
        }
      } else if (c == '(') {
        ++depth;
        out.push_back(c);
      } else if (c == ')') {
        if (--depth == 0) break;
        out.push_back(c);
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  std::string_view data_;
  std::size_t pos_;
};

// ---- filters -------------------------------------------------------------

std::string inflate(std::string_view in) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw PdfError("zlib initialisation failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());
  std::string out;
  std::array<char, 65536> buf;
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = ::inflate(&zs, Z_NO_FLUSH);
    out.append(buf.data(), buf.size() - zs.avail_out);
  } while (rc == Z_OK && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  // A truncated stream still yields whatever was decoded.
  if (rc != Z_STREAM_END && rc != Z_OK && rc != Z_BUF_ERROR && out.empty()) throw PdfError("corrupt Flate stream");
  return out;
}

std::string undo_png_predictor(const std::string& data, int columns, int colors, int bpc) {
  const int bpp = std::max(1, colors * bpc / 8);
  const std::size_t row_len = static_cast<std::size_t>((columns * colors * bpc + 7) / 8);
  std::string out;
  std::string prev(row_len, '\0');
  for (std::size_t pos = 0; pos + 1 + row_len <= data.size(); pos += row_len + 1) {
    const auto filter = static_cast<unsigned char>(data[pos]);
    std::string row = data.substr(pos + 1, row_len);
    for (std::size_t i = 0; i < row_len; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? static_cast<unsigned char>(row[i - bpp]) : 0;
      const int b = static_cast<unsigned char>(prev[i]);
      const int c = i >= static_cast<std::size_t>(bpp) ? static_cast<unsigned char>(prev[i - bpp]) : 0;
      int x = static_cast<unsigned char>(row[i]);
      switch (filter) {
        case 1:
          x += a;
          break;
        case 2:
          x += b;
          break;
        case 3:
          x += (a + b) / 2;
          break;
        case 4: {
          const int p = a + b - c;
          const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
          x += (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
          break;
        }
        default:
          break;
      }
      row[i] = static_cast<char>(x & 0xFF);
    }
    out += row;
    prev = std::move(row);
  }
  return out;
}

// ---- transforms ----------------------------------------------------------

struct Matrix {
  double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

  // this × other (row-vector convention used by PDF)
  Matrix operator*(const Matrix& o) const {
    return {a * o.a + b * o.c,       a * o.b + b * o.d,       c * o.a + d * o.c,
            c * o.b + d * o.d,       e * o.a + f * o.c + o.e, e * o.b + f * o.d + o.f};
  }
  std::pair<double, double> apply(double x, double y) const { return {a * x + c * y + e, b * x + d * y + f}; }
};

// ---- fonts ---------------------------------------------------------------

// Windows-1252 code points for 0x80..0x9F; 0 means undefined.
constexpr char32_t kWinAnsiHigh[32] = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0,      0x017D, 0,      0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178,
};

struct Font {
  std::size_t code_bytes = 1;
  std::map<std::uint32_t, std::u32string> to_unicode;

  std::string decode(std::string_view bytes) const {
    std::u32string out;
    for (std::size_t i = 0; i + code_bytes <= bytes.size(); i += code_bytes) {
      std::uint32_t code = 0;
      for (std::size_t k = 0; k < code_bytes; ++k) code = (code << 8) | static_cast<unsigned char>(bytes[i + k]);
      if (const auto it = to_unicode.find(code); it != to_unicode.end()) {
        out += it->second;
      } else if (code_bytes == 1) {
        if (code >= 0x80 && code < 0xA0) {
          if (kWinAnsiHigh[code - 0x80] != 0) out.push_back(kWinAnsiHigh[code - 0x80]);
        } else if (code >= 0x20 || code == '\t') {
          out.push_back(static_cast<char32_t>(code));
        }
      }
    }
    return to_utf8(out);
  }
};

std::u32string utf16be(std::string_view bytes) {
  std::u32string out;
  for (std::size_t i = 0; i + 1 < bytes.size(); i += 2) {
    char32_t u = (static_cast<unsigned char>(bytes[i]) << 8) | static_cast<unsigned char>(bytes[i + 1]);
    if (u >= 0xD800 && u < 0xDC00 && i + 3 < bytes.size()) {
      const char32_t lo = (static_cast<unsigned char>(bytes[i + 2]) << 8) | static_cast<unsigned char>(bytes[i + 3]);
      if (lo >= 0xDC00 && lo < 0xE000) {
        u = 0x10000 + ((u - 0xD800) << 10) + (lo - 0xDC00);
        i += 2;
      }
    }
    out.push_back(u);
  }
  return out;
}

std::uint32_t code_value(std::string_view bytes) {
  std::uint32_t v = 0;
  for (const char c : bytes) v = (v << 8) | static_cast<unsigned char>(c);
  return v;
}

void parse_cmap(std::string_view cmap, Font& font) {
  Lexer lex(cmap);
  std::vector<Object> operands;
  std::size_t longest_code = 0;
  while (!lex.at_end()) {
    Object obj;
    try {
      obj = lex.parse(false);
    } catch (const PdfError&) {
      break;
    }
    if (!obj.is(Object::Kind::kOperator)) {
      operands.push_back(std::move(obj));
      continue;
    }
    if (obj.text == "endcodespacerange") {
      for (const auto& o : operands) {
        if (o.is(Object::Kind::kString)) longest_code = std::max(longest_code, o.text.size());
      }
    } else if (obj.text == "endbfchar") {
      for (std::size_t i = 0; i + 1 < operands.size(); i += 2) {
        if (!operands[i].is(Object::Kind::kString)) continue;
        longest_code = std::max(longest_code, operands[i].text.size());
        if (operands[i + 1].is(Object::Kind::kString)) {
          font.to_unicode[code_value(operands[i].text)] = utf16be(operands[i + 1].text);
        }
      }
    } else if (obj.text == "endbfrange") {
      for (std::size_t i = 0; i + 2 < operands.size(); i += 3) {
        const auto& lo = operands[i];
        const auto& hi = operands[i + 1];
        const auto& dst = operands[i + 2];
        if (!lo.is(Object::Kind::kString) || !hi.is(Object::Kind::kString)) continue;
        longest_code = std::max(longest_code, lo.text.size());
        const auto first = code_value(lo.text);
        const auto last = std::min(code_value(hi.text), first + 0xFFFF);
        for (std::uint32_t code = first; code <= last; ++code) {
          if (dst.is(Object::Kind::kArray)) {
            const auto k = code - first;
            if (k < dst.items.size() && dst.items[k].is(Object::Kind::kString)) {
              font.to_unicode[code] = utf16be(dst.items[k].text);
            }
          } else if (dst.is(Object::Kind::kString)) {
            auto text = utf16be(dst.text);
            if (!text.empty()) text.back() += code - first;
            font.to_unicode[code] = std::move(text);
          }
        }
      }
    }
    operands.clear();
  }
  if (longest_code > 0) font.code_bytes = std::min<std::size_t>(longest_code, 4);
}

// ---- page content --------------------------------------------------------

struct PageInfo {
  const Object* dict = nullptr;
  const Object* resources = nullptr;
  std::array<double, 4> media_box{0, 0, 612, 792};
};

}  // namespace

struct PdfLayoutReader::Impl {
  std::string data;
  std::map<int, Object> objects;
  std::vector<PageInfo> pages;

  const Object& resolve(const Object& obj, int depth = 0) const {
    if (!obj.is(Object::Kind::kRef) || depth > 32) return obj;
    const auto it = objects.find(obj.ref_num);
    return it == objects.end() ? kNull : resolve(it->second, depth + 1);
  }
  const Object& get(const Object& dict, std::string_view key) const {
    const Object* v = dict.get(key);
    return v == nullptr ? kNull : resolve(*v);
  }
  double number(const Object& obj, double fallback = 0) const {
    const auto& v = resolve(obj);
    return v.is(Object::Kind::kNumber) ? v.number : fallback;
  }

  std::string decode_stream(const Object& stream) const {
    if (!stream.is(Object::Kind::kStream)) return {};
    std::vector<std::string> filters;
    const auto& filter = get(stream, "Filter");
    if (filter.is(Object::Kind::kName)) filters.push_back(filter.text);
    for (const auto& f : filter.items) {
      if (resolve(f).is(Object::Kind::kName)) filters.push_back(resolve(f).text);
    }
    const auto& parms_obj = get(stream, "DecodeParms");
    std::string out = stream.stream;
    for (std::size_t i = 0; i < filters.size(); ++i) {
      const auto& f = filters[i];
      if (f == "FlateDecode" || f == "Fl") {
        out = inflate(out);
        const Object& parms = parms_obj.is(Object::Kind::kArray) && i < parms_obj.items.size()
                                  ? resolve(parms_obj.items[i])
                                  : parms_obj;
        const int predictor = static_cast<int>(number(parms.get("Predictor") ? *parms.get("Predictor") : kNull, 1));
        if (predictor >= 10) {
          const auto param = [&](const char* key, double fallback) {
            const Object* v = parms.get(key);
            return static_cast<int>(v ? number(*v, fallback) : fallback);
          };
          out = undo_png_predictor(out, param("Columns", 1), param("Colors", 1), param("BitsPerComponent", 8));
        }
      } else if (f == "ASCIIHexDecode" || f == "AHx") {
        out = decode_hex(out.substr(0, out.find('>')));
      } else {
        return {};  // unsupported filter (image codecs and the like)
      }
    }
    return out;
  }

  void scan_objects() {
    const std::string_view d = data;
    std::size_t pos = 0;
    while ((pos = d.find("obj", pos)) != std::string_view::npos) {
      const std::size_t kw = pos;
      pos += 3;
      if (kw > 0 && !is_pdf_space(d[kw - 1])) continue;
      if (pos < d.size() && !is_pdf_space(d[pos]) && !is_delimiter(d[pos])) continue;
      // Walk back over "<num> <gen> ".
      std::size_t p = kw;
      while (p > 0 && is_pdf_space(d[p - 1])) --p;
      std::size_t gen_end = p;
      while (p > 0 && std::isdigit(static_cast<unsigned char>(d[p - 1]))) --p;
      if (p == gen_end) continue;
      std::size_t q = p;
      while (q > 0 && is_pdf_space(d[q - 1])) --q;
      if (q == p) continue;
      std::size_t num_end = q;
      while (q > 0 && std::isdigit(static_cast<unsigned char>(d[q - 1]))) --q;
      if (q == num_end) continue;
      const int num = std::atoi(std::string(d.substr(q, num_end - q)).c_str());
      try {
        Lexer lex(d, pos);
        Object obj = lex.parse();
        lex.skip_space();
        if (obj.is(Object::Kind::kDict) && d.compare(lex.pos(), 6, "stream") == 0) {
          std::size_t start = lex.pos() + 6;
          if (start < d.size() && d[start] == '\r') ++start;
          if (start < d.size() && d[start] == '\n') ++start;
          std::size_t end = std::string_view::npos;
          if (const Object* len = obj.get("Length"); len && len->is(Object::Kind::kNumber)) {
            const auto n = static_cast<std::size_t>(std::max(0.0, len->number));
            if (start + n <= d.size()) {
              std::size_t after = start + n;
              while (after < d.size() && is_pdf_space(d[after])) ++after;
              if (d.compare(after, 9, "endstream") == 0) end = start + n;
            }
          }
          if (end == std::string_view::npos) {
            end = d.find("endstream", start);
            if (end == std::string_view::npos) end = d.size();
            const std::size_t stop = end;
            if (end > start && d[end - 1] == '\n') --end;
            if (end > start && d[end - 1] == '\r') --end;
            pos = stop;
          } else {
            pos = end;
          }
          obj.kind = Object::Kind::kStream;
          obj.stream = std::string(d.substr(start, end - start));
        } else {
          pos = lex.pos();
        }
        objects[num] = std::move(obj);
      } catch (const PdfError&) {
        // skip unparseable object
      }
    }

    // Objects packed into object streams.
    std::vector<int> containers;
    for (const auto& [num, obj] : objects) {
      if (obj.is(Object::Kind::kStream) && get(obj, "Type").text == "ObjStm") containers.push_back(num);
    }
    for (const int num : containers) {
      const auto& container = objects[num];
      std::string body;
      try {
        body = decode_stream(container);
      } catch (const PdfError&) {
        continue;
      }
      const int n = static_cast<int>(number(container.get("N") ? *container.get("N") : kNull));
      const auto first = static_cast<std::size_t>(number(container.get("First") ? *container.get("First") : kNull));
      Lexer header(body);
      std::vector<std::pair<int, std::size_t>> entries;
      try {
        for (int i = 0; i < n; ++i) {
          const auto obj_num = header.parse(false);
          const auto offset = header.parse(false);
          entries.emplace_back(static_cast<int>(obj_num.number), static_cast<std::size_t>(offset.number));
        }
      } catch (const PdfError&) {
      }
      for (const auto& [obj_num, offset] : entries) {
        if (objects.contains(obj_num) || first + offset >= body.size()) continue;
        try {
          Lexer lex(body, first + offset);
          objects[obj_num] = lex.parse();
        } catch (const PdfError&) {
        }
      }
    }
  }

  const Object* find_catalog() const {
    const std::string_view d = data;
    for (auto pos = d.rfind("trailer"); pos != std::string_view::npos;
         pos = pos == 0 ? std::string_view::npos : d.rfind("trailer", pos - 1)) {
      try {
        Lexer lex(d, pos + 7);
        const auto trailer = lex.parse();
        if (const Object* root = trailer.get("Root")) {
          const auto& cat = resolve(*root);
          if (cat.is_dict()) return &cat;
        }
      } catch (const PdfError&) {
      }
    }
    for (const auto& [num, obj] : objects) {
      if (obj.is_dict() && get(obj, "Type").text == "XRef") {
        if (const Object* root = obj.get("Root"); root && resolve(*root).is_dict()) return &resolve(*root);
      }
    }
    for (const auto& [num, obj] : objects) {
      if (obj.is_dict() && get(obj, "Type").text == "Catalog") return &obj;
    }
    return nullptr;
  }

  void collect_pages(const Object& node, const Object* resources, std::array<double, 4> box, int depth) {
    if (depth > 64 || !node.is_dict()) return;
    if (const auto& r = get(node, "Resources"); r.is_dict()) resources = &r;
    if (const auto& mb = get(node, "MediaBox"); mb.is(Object::Kind::kArray) && mb.items.size() == 4) {
      for (int i = 0; i < 4; ++i) box[i] = number(mb.items[i]);
    }
    const auto& kids = get(node, "Kids");
    const auto& type = get(node, "Type");
    if (type.text == "Page" || (!kids.is(Object::Kind::kArray) && node.get("Contents"))) {
      pages.push_back({&node, resources, box});
      return;
    }
    for (const auto& kid : kids.items) collect_pages(resolve(kid), resources, box, depth + 1);
  }
};

namespace {

class ContentInterpreter {
 public:
  ContentInterpreter(const PdfLayoutReader::Impl& pdf, double origin_x, double origin_y)
      : pdf_(pdf), origin_x_(origin_x), origin_y_(origin_y) {}

  void run(std::string_view content, const Object* resources, const Matrix& ctm, int depth) {
    if (depth > 8) return;
    std::vector<Matrix> stack;
    Matrix gs = ctm;
    Lexer lex(content);
    std::vector<Object> operands;
    while (!lex.at_end()) {
      Object obj;
      try {
        obj = lex.parse(false);
      } catch (const PdfError&) {
        break;
      }
      if (!obj.is(Object::Kind::kOperator)) {
        operands.push_back(std::move(obj));
        continue;
      }
      const std::string& op = obj.text;
      const auto num = [&](std::size_t i) {
        return i < operands.size() && operands[i].is(Object::Kind::kNumber) ? operands[i].number : 0.0;
      };
      if (op == "q") {
        stack.push_back(gs);
      } else if (op == "Q") {
        if (!stack.empty()) {
          gs = stack.back();
          stack.pop_back();
        }
      } else if (op == "cm" && operands.size() >= 6) {
        gs = Matrix{num(0), num(1), num(2), num(3), num(4), num(5)} * gs;
      } else if (op == "BT") {
        tm_ = tlm_ = Matrix{};
        flush();
      } else if (op == "ET") {
        flush();
      } else if (op == "Tm" && operands.size() >= 6) {
        tm_ = tlm_ = Matrix{num(0), num(1), num(2), num(3), num(4), num(5)};
        moved_ = true;
      } else if (op == "Td" && operands.size() >= 2) {
        next_line(num(0), num(1));
      } else if (op == "TD" && operands.size() >= 2) {
        leading_ = -num(1);
        next_line(num(0), num(1));
      } else if (op == "T*") {
        next_line(0, -leading_);
      } else if (op == "TL" && !operands.empty()) {
        leading_ = num(0);
      } else if (op == "Tf" && operands.size() >= 2) {
        font_ = load_font(resources, operands[0].text);
        font_size_ = num(1);
      } else if (op == "Tj" && !operands.empty()) {
        show(operands.back().text, gs);
      } else if (op == "'" && !operands.empty()) {
        next_line(0, -leading_);
        show(operands.back().text, gs);
      } else if (op == "\"" && operands.size() >= 3) {
        next_line(0, -leading_);
        show(operands.back().text, gs);
      } else if (op == "TJ" && !operands.empty() && operands.back().is(Object::Kind::kArray)) {
        for (const auto& item : operands.back().items) {
          if (item.is(Object::Kind::kString)) {
            show(item.text, gs);
          } else if (item.is(Object::Kind::kNumber) && item.number < -250) {
            pending_space_ = true;
          }
        }
      } else if (op == "Do" && !operands.empty()) {
        draw_xobject(resources, operands[0].text, gs, depth);
      } else if (op == "BI") {
        skip_inline_image(lex, content);
        add_image(gs);
      }
      operands.clear();
    }
    flush();
  }

  AnchorLayout take(double width, double height) {
    flush();
    AnchorLayout layout;
    layout.page_width = width;
    layout.page_height = height;
    layout.text_blocks = std::move(blocks_);
    layout.image_boxes = std::move(images_);
    return layout;
  }

 private:
  void next_line(double tx, double ty) {
    tlm_ = Matrix{1, 0, 0, 1, tx, ty} * tlm_;
    tm_ = tlm_;
    moved_ = true;
  }

  void show(const std::string& bytes, const Matrix& gs) {
    const std::string text = font_ ? font_->decode(bytes) : Font{}.decode(bytes);
    if (text.empty()) return;
    const Matrix m = tm_ * gs;
    const auto [x, y] = m.apply(0, 0);
    const double size = std::max(1.0, std::fabs(font_size_ * std::hypot(m.c, m.d)));
    if (!current_ || std::fabs(y - origin_y_ - last_y_) > size * 0.5) {
      flush();
      current_ = TextBlock{x - origin_x_, y - origin_y_, ""};
    } else if ((moved_ || pending_space_) && !current_->text.empty() && current_->text.back() != ' ' &&
               text.front() != ' ') {
      current_->text.push_back(' ');
    }
    current_->text += text;
    last_y_ = y - origin_y_;
    moved_ = false;
    pending_space_ = false;
  }

  void flush() {
    if (current_) {
      auto& t = current_->text;
      const auto first = t.find_first_not_of(" \t\r\n");
      if (first != std::string::npos) {
        const auto last = t.find_last_not_of(" \t\r\n");
        t = t.substr(first, last - first + 1);
        blocks_.push_back(std::move(*current_));
      }
    }
    current_.reset();
    pending_space_ = false;
  }

  void add_image(const Matrix& gs) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (const auto& [u, v] : {std::pair{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}}) {
      const auto [x, y] = gs.apply(u, v);
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
    images_.push_back({x0 - origin_x_, y0 - origin_y_, x1 - origin_x_, y1 - origin_y_});
  }

  const Font* load_font(const Object* resources, const std::string& name) {
    if (resources == nullptr) return nullptr;
    const auto& fonts = pdf_.get(*resources, "Font");
    const Object* entry = fonts.get(name);
    if (entry == nullptr) return nullptr;
    const Object& font_dict = pdf_.resolve(*entry);
    if (const auto it = fonts_.find(&font_dict); it != fonts_.end()) return &it->second;
    Font font;
    const auto& subtype = pdf_.get(font_dict, "Subtype");
    if (subtype.text == "Type0") font.code_bytes = 2;
    if (const auto& cmap = pdf_.get(font_dict, "ToUnicode"); cmap.is(Object::Kind::kStream)) {
      try {
        parse_cmap(pdf_.decode_stream(cmap), font);
      } catch (const PdfError&) {
      }
    }
    return &fonts_.emplace(&font_dict, std::move(font)).first->second;
  }

  void draw_xobject(const Object* resources, const std::string& name, const Matrix& gs, int depth) {
    if (resources == nullptr) return;
    const Object* entry = pdf_.get(*resources, "XObject").get(name);
    if (entry == nullptr) return;
    const Object& xobj = pdf_.resolve(*entry);
    const auto& subtype = pdf_.get(xobj, "Subtype");
    if (subtype.text == "Image") {
      add_image(gs);
    } else if (subtype.text == "Form") {
      Matrix form;
      if (const auto& m = pdf_.get(xobj, "Matrix"); m.is(Object::Kind::kArray) && m.items.size() == 6) {
        form = {pdf_.number(m.items[0]), pdf_.number(m.items[1]), pdf_.number(m.items[2]),
                pdf_.number(m.items[3]), pdf_.number(m.items[4]), pdf_.number(m.items[5])};
      }
      const auto& own = pdf_.get(xobj, "Resources");
      std::string body;
      try {
        body = pdf_.decode_stream(xobj);
      } catch (const PdfError&) {
        return;
      }
      const Matrix saved_tm = tm_, saved_tlm = tlm_;
      run(body, own.is_dict() ? &own : resources, form * gs, depth + 1);
      tm_ = saved_tm;
      tlm_ = saved_tlm;
    }
  }

  static void skip_inline_image(Lexer& lex, std::string_view content) {
    // Skip the parameter dictionary up to ID, then raw bytes up to EI.
    while (!lex.at_end()) {
      const auto obj = lex.parse(false);
      if (obj.is(Object::Kind::kOperator) && obj.text == "ID") break;
    }
    std::size_t pos = lex.pos() + 1;
    while (pos + 2 <= content.size()) {
      if (content.compare(pos, 2, "EI") == 0 && is_pdf_space(content[pos - 1]) &&
          (pos + 2 == content.size() || is_pdf_space(content[pos + 2]))) {
        lex.seek(pos + 2);
        return;
      }
      ++pos;
    }
    lex.seek(content.size());
  }

  const PdfLayoutReader::Impl& pdf_;
  double origin_x_;
  double origin_y_;
  Matrix tm_;
  Matrix tlm_;
  double leading_ = 0;
  double font_size_ = 12;
  const Font* font_ = nullptr;
  std::map<const Object*, Font> fonts_;
  std::optional<TextBlock> current_;
  double last_y_ = 0;
  bool moved_ = false;
  bool pending_space_ = false;
  std::vector<TextBlock> blocks_;
  std::vector<ImageBox> images_;
};

}  // namespace

PdfLayoutReader::PdfLayoutReader(std::string bytes) : impl_(std::make_unique<Impl>()) {
  impl_->data = std::move(bytes);
  if (impl_->data.compare(0, 5, "%PDF-") != 0 && impl_->data.find("%PDF-") == std::string::npos) {
    throw PdfError("not a PDF file");
  }
  impl_->scan_objects();
  const Object* catalog = impl_->find_catalog();
  if (catalog == nullptr) throw PdfError("PDF has no document catalog");
  const auto& root = impl_->get(*catalog, "Pages");
  impl_->collect_pages(root, nullptr, {0, 0, 612, 792}, 0);
  if (impl_->pages.empty()) throw PdfError("PDF has no pages");
}

PdfLayoutReader::~PdfLayoutReader() = default;
PdfLayoutReader::PdfLayoutReader(PdfLayoutReader&&) noexcept = default;
PdfLayoutReader& PdfLayoutReader::operator=(PdfLayoutReader&&) noexcept = default;

PdfLayoutReader PdfLayoutReader::open(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw PdfError("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return PdfLayoutReader(buf.str());
}

std::size_t PdfLayoutReader::page_count() const { return impl_->pages.size(); }

AnchorLayout PdfLayoutReader::layout(int page) const {
  if (page < 1 || static_cast<std::size_t>(page) > impl_->pages.size()) {
    throw PdfError("page " + std::to_string(page) + " out of range (document has " +
                   std::to_string(impl_->pages.size()) + ")");
  }
  const auto& info = impl_->pages[static_cast<std::size_t>(page - 1)];
  const auto& box = info.media_box;
  std::string content;
  const auto& contents = impl_->get(*info.dict, "Contents");
  if (contents.is(Object::Kind::kStream)) {
    content = impl_->decode_stream(contents);
  } else {
    for (const auto& part : contents.items) {
      content += impl_->decode_stream(impl_->resolve(part));
      content.push_back('\n');
    }
  }
  ContentInterpreter interpreter(*impl_, std::min(box[0], box[2]), std::min(box[1], box[3]));
  interpreter.run(content, info.resources, Matrix{}, 0);
  auto layout = interpreter.take(std::fabs(box[2] - box[0]), std::fabs(box[3] - box[1]));
  for (auto& b : layout.text_blocks) b.text = sanitize_utf8(b.text);
  return layout;
}

AnchorLayout load_layout(const std::filesystem::path& file, int page) {
  if (file.extension() == ".json") {
    std::ifstream in(file);
    if (!in) throw PdfError("cannot open " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      return parse_layout_json(buf.str());
    } catch (const std::invalid_argument& e) {
      throw PdfError(file.string() + ": " + e.what());
    }
  }
  return PdfLayoutReader::open(file).layout(page);
}

}  // namespace ocrbench
