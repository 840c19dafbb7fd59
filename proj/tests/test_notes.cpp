#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "sightread/notes.hpp"
#include "sightread/rng.hpp"

using namespace sightread;

TEST_CASE("note_frequency anchors A4 at 440 and doubles per octave") {
  CHECK(note_frequency(PitchClass::A, 4) == 440.0);
  CHECK(note_frequency(PitchClass::A, 5) == Catch::Approx(880.0).margin(1e-12));
  CHECK(note_frequency(PitchClass::A, 3) == Catch::Approx(220.0).margin(1e-12));
  // independent high-precision evaluation of 440 * 2^(-9/12)
  CHECK(note_frequency(PitchClass::C, 4) ==
        Catch::Approx(261.6255653005986).margin(1e-4));
}

TEST_CASE("note_frequency is strictly increasing with exact octave ratio") {
  double prev = 0.0;
  for (int octave = 0; octave <= 9; ++octave) {
    for (int pc = 0; pc < kPitchClassCount; ++pc) {
      const double f = note_frequency(static_cast<PitchClass>(pc), octave);
      CHECK(f > prev);
      prev = f;
    }
  }
  for (int pc = 0; pc < kPitchClassCount; ++pc) {
    for (int octave = 0; octave <= 8; ++octave) {
      const double lo = note_frequency(static_cast<PitchClass>(pc), octave);
      const double hi = note_frequency(static_cast<PitchClass>(pc), octave + 1);
      CHECK(std::abs(hi / lo - 2.0) < 1e-12);
    }
  }
}

TEST_CASE("parse_score handles single notes, octaves and defaults") {
  const Score s = parse_score("A4:q");
  REQUIRE(s.phrases.size() == 1);
  REQUIRE(s.phrases[0].notes.size() == 1);
  const Note& n = s.phrases[0].notes[0];
  CHECK(n.pitch_class == PitchClass::A);
  CHECK(n.octave == 4);
  CHECK(n.frequency == 440.0);
  CHECK(n.duration == 1.0);
  CHECK(n.onset == 0.0);
  CHECK(s.tempo == 60.0);
  CHECK(s.tonic_frequency == 440.0);

  CHECK(parse_score("A5:q").phrases[0].notes[0].frequency ==
        Catch::Approx(880.0).margin(1e-12));
}

TEST_CASE("phrase separators restart onsets") {
  const Score s = parse_score("C4:q | E4:h");
  REQUIRE(s.phrases.size() == 2);
  CHECK(s.phrases[0].notes.size() == 1);
  CHECK(s.phrases[1].notes.size() == 1);
  CHECK(s.phrases[1].notes[0].onset == 0.0);
  CHECK(s.explicit_phrases);
}

TEST_CASE("onsets accumulate durations within a phrase") {
  const Score s = parse_score("C4:q D4:e E4:h F4:s");
  const auto& notes = s.phrases[0].notes;
  REQUIRE(notes.size() == 4);
  CHECK(notes[0].onset == 0.0);
  CHECK(notes[1].onset == 1.0);
  CHECK(notes[2].onset == 1.5);
  CHECK(notes[3].onset == 3.5);
}

TEST_CASE("headers set tempo and tonic before notes") {
  const Score s = parse_score("tempo=120\ntonic=442\nA4:q");
  CHECK(s.tempo == 120.0);
  CHECK(s.tonic_frequency == 442.0);
  CHECK_THROWS_AS(parse_score("A4:q tempo=120"), ParseError);
}

TEST_CASE("parser reports position and token on malformed input") {
  try {
    parse_score("A4:q\nH4:q");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 1);
    CHECK(e.token() == "H4:q");
  }
  CHECK_THROWS_AS(parse_score(""), ParseError);
  CHECK_THROWS_AS(parse_score("# only a comment\n"), ParseError);
  CHECK_THROWS_AS(parse_score("A4:x"), ParseError);
  CHECK_THROWS_AS(parse_score("A4"), ParseError);
  CHECK_THROWS_AS(parse_score("A:q"), ParseError);
  CHECK_THROWS_AS(parse_score("A4:0"), ParseError);
  CHECK_THROWS_AS(parse_score("A4:-1"), ParseError);
}

TEST_CASE("numeric durations parse and nonpositive ones are rejected") {
  const Score s = parse_score("A4:1.5");
  CHECK(s.phrases[0].notes[0].duration == 1.5);
}

TEST_CASE("comments are ignored") {
  const Score s = parse_score("# header comment\nA4:q B4:e # trailing\n");
  CHECK(s.note_count() == 2);
}

TEST_CASE("segment_phrases chunks unmarked scores") {
  const Score s = parse_score("C4:q D4:q E4:q F4:q G4:q A4:q B4:q");
  const auto phrases = segment_phrases(s, 3);
  REQUIRE(phrases.size() == 3);
  CHECK(phrases[0].notes.size() == 3);
  CHECK(phrases[1].notes.size() == 3);
  CHECK(phrases[2].notes.size() == 1);

  const auto exact = segment_phrases(parse_score("C4:q D4:q E4:q"), 3);
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].notes.size() == 3);
}

TEST_CASE("explicit separators win over the window") {
  const Score s = parse_score("C4:q D4:q E4:q | F4:q");
  const auto phrases = segment_phrases(s, 2);
  REQUIRE(phrases.size() == 2);
  CHECK(phrases[0].notes.size() == 3);
  CHECK(phrases[1].notes.size() == 1);
}

TEST_CASE("segment_phrases rejects a zero window and preserves the stream") {
  const Score s = parse_score("C4:q D4:q E4:q F4:q G4:q");
  CHECK_THROWS_AS(segment_phrases(s, 0), std::invalid_argument);

  const auto phrases = segment_phrases(s, 2);
  std::vector<Note> flattened;
  for (const auto& p : phrases)
    flattened.insert(flattened.end(), p.notes.begin(), p.notes.end());
  std::vector<Note> original;
  for (const auto& p : s.phrases)
    original.insert(original.end(), p.notes.begin(), p.notes.end());
  CHECK(flattened == original);
}

namespace {

Score random_score(Rng& rng) {
  static const char* durations[] = {"w", "h", "q", "e", "s"};
  std::string text;
  text += "tempo=" + std::to_string(40 + rng.uniform_int(160)) + "\n";
  const int phrases = 1 + rng.uniform_int(4);
  for (int p = 0; p < phrases; ++p) {
    if (p > 0) text += " | ";
    const int notes = 1 + rng.uniform_int(6);
    for (int n = 0; n < notes; ++n) {
      const auto pc = static_cast<PitchClass>(rng.uniform_int(12));
      text += std::string(pitch_class_name(pc)) +
              std::to_string(2 + rng.uniform_int(5)) + ":" +
              durations[rng.uniform_int(5)] + " ";
    }
  }
  return parse_score(text);
}

}  // namespace

TEST_CASE("canonical formatting round-trips and is idempotent") {
  Rng rng(20240611);
  for (int trial = 0; trial < 200; ++trial) {
    const Score s = random_score(rng);
    const std::string canonical = format_score(s);
    const Score reparsed = parse_score(canonical);
    CHECK(reparsed == s);
    CHECK(format_score(reparsed) == canonical);
  }
}

TEST_CASE("phrase note counts add up and onsets increase strictly") {
  Rng rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    const Score s = random_score(rng);
    std::size_t total = 0;
    for (const auto& p : s.phrases) {
      REQUIRE(!p.notes.empty());
      total += p.notes.size();
      for (std::size_t i = 1; i < p.notes.size(); ++i)
        CHECK(p.notes[i].onset > p.notes[i - 1].onset);
    }
    CHECK(total == s.note_count());
  }
}
