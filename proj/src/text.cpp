// Copyright 2026 The bloop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bloop/text.hpp"

#include <istream>
#include <ostream>

#include "bloop/error.hpp"

namespace bloop {

namespace {

constexpr std::string_view kPunctuation = ".,;:!?\"'()";

struct CodePoint {
  char32_t value = 0;
  std::size_t length = 0;
};

CodePoint decode_utf8(std::string_view text, std::size_t pos) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(text[i]);
  };
  const unsigned char lead = byte(pos);
  std::size_t length = 0;
  char32_t value = 0;
  if (lead < 0x80) {
    return {lead, 1};
  } else if ((lead & 0xE0) == 0xC0) {
    length = 2;
    value = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    length = 3;
    value = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    length = 4;
    value = lead & 0x07;
  } else {
    throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(pos));
  }
  if (pos + length > text.size()) {
    throw DataError("truncated UTF-8 sequence at offset " +
                    std::to_string(pos));
  }
  for (std::size_t i = 1; i < length; ++i) {
    const unsigned char cont = byte(pos + i);
    if ((cont & 0xC0) != 0x80) {
      throw DataError("invalid UTF-8 continuation byte at offset " +
                      std::to_string(pos + i));
    }
    value = (value << 6) | (cont & 0x3F);
  }
  static constexpr char32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
  if (value < kMinForLength[length] || value > 0x10FFFF ||
      (value >= 0xD800 && value <= 0xDFFF)) {
    throw DataError("invalid UTF-8 code point at offset " +
                    std::to_string(pos));
  }
  return {value, length};
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_sentence_final(std::string_view surface) {
  return surface == "." || surface == "!" || surface == "?";
}

template <typename Map>
Document map_sentences(std::string_view text, Map&& to_id) {
  Document doc;
  doc.raw = std::string(text);
  for (const auto& sentence : segment_sentences(text)) {
    std::vector<TokenId> ids;
    ids.reserve(sentence.size());
    for (const auto& tok : sentence) ids.push_back(to_id(tok));
    doc.sentences.push_back(std::move(ids));
  }
  return doc;
}

}  // namespace

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary vocab;
  for (auto& tok : tokens) {
    if (vocab.find(tok)) throw DataError("duplicate vocabulary token: " + tok);
    vocab.add(tok);
  }
  return vocab;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!contains(id)) {
    throw DataError("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::add(std::string_view surface) {
  if (auto existing = find(surface)) return *existing;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(surface);
  index_.emplace(tokens_.back(), id);
  newline_mask_.push_back(surface.find('\n') != std::string_view::npos);
  return id;
}

std::vector<TokenId> Vocabulary::newline_ids() const {
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < newline_mask_.size(); ++i) {
    if (newline_mask_[i]) ids.push_back(static_cast<TokenId>(i));
  }
  return ids;
}

TokenId Vocabulary::set_unknown(std::string_view surface) {
  unknown_ = add(surface);
  return *unknown_;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& tok : tokens_) {
    for (char c : tok) {
      if (c == '\\') {
        out << "\\\\";
      } else if (c == '\n') {
        out << "\\n";
      } else {
        out << c;
      }
    }
    out << '\n';
  }
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string tok;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] != '\\') {
        tok.push_back(line[i]);
        continue;
      }
      if (i + 1 >= line.size()) {
        throw DataError("vocabulary line " + std::to_string(line_no) +
                        ": dangling escape");
      }
      const char next = line[++i];
      if (next == 'n') {
        tok.push_back('\n');
      } else if (next == '\\') {
        tok.push_back('\\');
      } else {
        throw DataError("vocabulary line " + std::to_string(line_no) +
                        ": unknown escape");
      }
    }
    tokens.push_back(std::move(tok));
  }
  return from_tokens(std::move(tokens));
}

std::vector<TokenId> Document::flatten() const {
  std::vector<TokenId> out;
  out.reserve(token_count());
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::size_t Document::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

bool is_punctuation_token(std::string_view surface) {
  return surface.size() == 1 &&
         kPunctuation.find(surface[0]) != std::string_view::npos;
}

std::vector<SurfaceToken> split_surface(std::string_view text) {
  std::vector<SurfaceToken> out;
  std::size_t word_start = std::string_view::npos;
  const auto flush = [&](std::size_t end) {
    if (word_start != std::string_view::npos) {
      out.push_back({std::string(text.substr(word_start, end - word_start)),
                     word_start});
      word_start = std::string_view::npos;
    }
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const CodePoint cp = decode_utf8(text, pos);
    if (cp.value == '\n') {
      flush(pos);
      out.push_back({"\n", pos});
    } else if (is_unicode_space(cp.value)) {
      flush(pos);
    } else if (cp.length == 1 &&
               kPunctuation.find(static_cast<char>(cp.value)) !=
                   std::string_view::npos) {
      flush(pos);
      out.push_back({std::string(1, static_cast<char>(cp.value)), pos});
    } else if (word_start == std::string_view::npos) {
      word_start = pos;
    }
    pos += cp.length;
  }
  flush(text.size());
  return out;
}

std::vector<std::vector<SurfaceToken>> segment_sentences(
    std::string_view text) {
  std::vector<std::vector<SurfaceToken>> sentences;
  std::vector<SurfaceToken> current;
  const auto followed_by_space_or_end = [&](const SurfaceToken& tok) {
    const std::size_t next = tok.offset + tok.text.size();
    if (next >= text.size()) return true;
    return is_unicode_space(decode_utf8(text, next).value);
  };
  for (auto& tok : split_surface(text)) {
    if (tok.text == "\n") {
      if (!current.empty()) {
        current.push_back(std::move(tok));
        sentences.push_back(std::move(current));
        current.clear();
      } else if (!sentences.empty()) {
        sentences.back().push_back(std::move(tok));
      }
      continue;
    }
    const bool closes =
        is_sentence_final(tok.text) && followed_by_space_or_end(tok);
    current.push_back(std::move(tok));
    if (closes) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

Document tokenize(std::string_view text, Vocabulary& vocab) {
  return map_sentences(text,
                       [&](const SurfaceToken& t) { return vocab.add(t.text); });
}

Document tokenize_frozen(std::string_view text, const Vocabulary& vocab) {
  return map_sentences(text, [&](const SurfaceToken& t) {
    if (auto id = vocab.find(t.text)) return *id;
    if (auto unk = vocab.unknown_id()) return *unk;
    throw DataError("unknown token '" + t.text + "' at byte offset " +
                    std::to_string(t.offset));
  });
}

std::string detokenize(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  bool previous_newline = true;
  for (TokenId id : ids) {
    const std::string& tok = vocab.token(id);
    const bool newline = tok == "\n";
    if (!previous_newline && !newline && !is_punctuation_token(tok)) {
      out.push_back(' ');
    }
    out += tok;
    previous_newline = newline;
  }
  return out;
}

}  // namespace bloop
