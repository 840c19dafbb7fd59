#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sightread {

enum class PitchClass : int {
  C = 0,
  Cs = 1,
  D = 2,
  Ds = 3,
  E = 4,
  F = 5,
  Fs = 6,
  G = 7,
  Gs = 8,
  A = 9,
  As = 10,
  B = 11,
};

inline constexpr int kPitchClassCount = 12;

inline const char* pitch_class_name(PitchClass pc) {
  static const char* names[kPitchClassCount] = {"C",  "C#", "D",  "D#",
                                                "E",  "F",  "F#", "G",
                                                "G#", "A",  "A#", "B"};
  return names[static_cast<int>(pc)];
}

// MIDI note number; C4 = 60, A4 = 69.
inline int midi_number(PitchClass pc, int octave) {
  return (octave + 1) * 12 + static_cast<int>(pc);
}

inline PitchClass pitch_class_of_midi(int midi) {
  return static_cast<PitchClass>(((midi % 12) + 12) % 12);
}

inline int octave_of_midi(int midi) { return midi / 12 - 1; }

// 12-tone equal temperament anchored at A4 = 440 Hz.
inline double note_frequency(PitchClass pc, int octave) {
  const int semitones_from_a4 = midi_number(pc, octave) - 69;
  return 440.0 * std::exp2(static_cast<double>(semitones_from_a4) / 12.0);
}

inline double midi_frequency(int midi) {
  return 440.0 * std::exp2(static_cast<double>(midi - 69) / 12.0);
}

struct Note {
  PitchClass pitch_class = PitchClass::C;
  int octave = 4;
  double frequency = 0.0;  // Hz, derived from pitch_class/octave
  double duration = 1.0;   // beats
  double onset = 0.0;      // beats from phrase start, derived

  friend bool operator==(const Note& a, const Note& b) {
    return a.pitch_class == b.pitch_class && a.octave == b.octave &&
           a.frequency == b.frequency && a.duration == b.duration &&
           a.onset == b.onset;
  }
};

struct Phrase {
  std::vector<Note> notes;
  std::size_t index = 0;

  friend bool operator==(const Phrase& a, const Phrase& b) {
    return a.index == b.index && a.notes == b.notes;
  }
};

struct Score {
  std::vector<Phrase> phrases;
  double tempo = 60.0;             // beats per minute
  double tonic_frequency = 440.0;  // Hz
  bool explicit_phrases = false;   // a '|' separator appeared in the source

  std::size_t note_count() const {
    std::size_t n = 0;
    for (const auto& p : phrases) n += p.notes.size();
    return n;
  }

  friend bool operator==(const Score& a, const Score& b) {
    return a.tempo == b.tempo && a.tonic_frequency == b.tonic_frequency &&
           a.explicit_phrases == b.explicit_phrases && a.phrases == b.phrases;
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, int column, std::string token)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + message +
                           (token.empty() ? "" : " ('" + token + "')")),
        line_(line),
        column_(column),
        token_(std::move(token)) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& token() const { return token_; }

 private:
  int line_;
  int column_;
  std::string token_;
};

namespace detail {

struct Token {
  std::string text;
  int line;
  int column;
};

inline std::vector<Token> tokenize_score(std::string_view text) {
  std::vector<Token> tokens;
  int line = 1;
  int column = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      column = 1;
      ++i;
      continue;
    }
    if (c == '#') {  // comment to end of line; sharps live inside tokens
      while (i < text.size() && text[i] != '\n') ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++column;
      ++i;
      continue;
    }
    if (c == '|') {
      tokens.push_back({"|", line, column});
      ++column;
      ++i;
      continue;
    }
    const int start_col = column;
    std::string word;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
           text[i] != '|') {
      word.push_back(text[i]);
      ++i;
      ++column;
    }
    tokens.push_back({std::move(word), line, start_col});
  }
  return tokens;
}

inline bool parse_duration_letter(char c, double& beats) {
  switch (c) {
    case 'w': beats = 4.0; return true;
    case 'h': beats = 2.0; return true;
    case 'q': beats = 1.0; return true;
    case 'e': beats = 0.5; return true;
    case 's': beats = 0.25; return true;
    default: return false;
  }
}

inline const char* duration_letter(double beats) {
  if (beats == 4.0) return "w";
  if (beats == 2.0) return "h";
  if (beats == 1.0) return "q";
  if (beats == 0.5) return "e";
  if (beats == 0.25) return "s";
  return nullptr;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// Note token grammar: PITCH OCTAVE ':' DUR, e.g. "A4:q", "C#5:e".
// DUR is one of w/h/q/e/s (4, 2, 1, 1/2, 1/4 beats) or a positive decimal
// beat count. '|' separates phrases, '#' starts a comment, and the optional
// header lines "tempo=<bpm>" / "tonic=<Hz>" must precede the first note.
inline Score parse_score(std::string_view text) {
  const auto tokens = detail::tokenize_score(text);

  Score score;
  std::vector<Note> current;
  double cursor = 0.0;  // running onset within the current phrase
  bool saw_note = false;

  auto flush_phrase = [&] {
    if (!current.empty()) {
      score.phrases.push_back({std::move(current), score.phrases.size()});
      current.clear();
      cursor = 0.0;
    }
  };

  for (const auto& tok : tokens) {
    if (tok.text == "|") {
      score.explicit_phrases = true;
      flush_phrase();
      continue;
    }
    if (auto eq = tok.text.find('='); eq != std::string::npos) {
      const std::string key = tok.text.substr(0, eq);
      const std::string val = tok.text.substr(eq + 1);
      if (key != "tempo" && key != "tonic")
        throw ParseError("unknown header", tok.line, tok.column, tok.text);
      if (saw_note)
        throw ParseError("header after first note", tok.line, tok.column,
                         tok.text);
      char* end = nullptr;
      const double x = std::strtod(val.c_str(), &end);
      if (end == val.c_str() || *end != '\0' || !(x > 0.0))
        throw ParseError("header value must be a positive number", tok.line,
                         tok.column, tok.text);
      (key == "tempo" ? score.tempo : score.tonic_frequency) = x;
      continue;
    }

    // note token
    const std::string& t = tok.text;
    std::size_t p = 0;
    if (p >= t.size() || t[p] < 'A' || t[p] > 'G')
      throw ParseError("unknown pitch class", tok.line, tok.column, t);
    static const int letter_semitone[7] = {9, 11, 0, 2, 4, 5, 7};  // A..G
    int semis = letter_semitone[t[p] - 'A'];
    ++p;
    if (p < t.size() && t[p] == '#') {
      semis = (semis + 1) % 12;
      ++p;
    }
    if (p >= t.size() || !std::isdigit(static_cast<unsigned char>(t[p])))
      throw ParseError("missing octave digit", tok.line, tok.column, t);
    const int octave = t[p] - '0';
    ++p;
    if (p >= t.size() || t[p] != ':')
      throw ParseError("missing ':DUR' suffix", tok.line, tok.column, t);
    ++p;
    if (p >= t.size())
      throw ParseError("missing duration", tok.line, tok.column, t);

    double beats = 0.0;
    const std::string dur = t.substr(p);
    if (dur.size() == 1 && detail::parse_duration_letter(dur[0], beats)) {
      // letter duration
    } else {
      char* end = nullptr;
      beats = std::strtod(dur.c_str(), &end);
      if (end == dur.c_str() || *end != '\0')
        throw ParseError("malformed duration", tok.line, tok.column, t);
      if (!(beats > 0.0))
        throw ParseError("nonpositive duration", tok.line, tok.column, t);
    }

    Note note;
    note.pitch_class = static_cast<PitchClass>(semis);
    note.octave = octave;
    note.frequency = note_frequency(note.pitch_class, note.octave);
    note.duration = beats;
    note.onset = cursor;
    cursor += beats;
    current.push_back(note);
    saw_note = true;
  }
  flush_phrase();

  if (score.phrases.empty())
    throw ParseError("empty input: no notes", 1, 1, "");
  return score;
}

// Canonical text form; parse(format_score(s)) == s for any parsed score.
inline std::string format_score(const Score& score) {
  std::string out;
  out += "tempo=" + detail::format_double(score.tempo) + "\n";
  out += "tonic=" + detail::format_double(score.tonic_frequency) + "\n";
  for (std::size_t pi = 0; pi < score.phrases.size(); ++pi) {
    if (pi > 0) out += " | ";
    const auto& notes = score.phrases[pi].notes;
    for (std::size_t ni = 0; ni < notes.size(); ++ni) {
      if (ni > 0) out += ' ';
      const Note& n = notes[ni];
      out += pitch_class_name(n.pitch_class);
      out += std::to_string(n.octave);
      out += ':';
      if (const char* letter = detail::duration_letter(n.duration))
        out += letter;
      else
        out += detail::format_double(n.duration);
    }
  }
  out += '\n';
  return out;
}

// Regroup a score's note stream into phrases of `window` notes. Explicit
// '|' separators in the source win over the window; note contents (onsets
// included) are untouched, only the grouping changes.
inline std::vector<Phrase> segment_phrases(const Score& score,
                                           std::size_t window) {
  if (window == 0)
    throw std::invalid_argument("segment_phrases: window must be >= 1");
  if (score.explicit_phrases) return score.phrases;

  std::vector<Note> all;
  for (const auto& p : score.phrases)
    all.insert(all.end(), p.notes.begin(), p.notes.end());

  std::vector<Phrase> out;
  for (std::size_t start = 0; start < all.size(); start += window) {
    const std::size_t end = std::min(start + window, all.size());
    out.push_back({std::vector<Note>(all.begin() + static_cast<long>(start),
                                     all.begin() + static_cast<long>(end)),
                   out.size()});
  }
  return out;
}

}  // namespace sightread
