#pragma once

#include <string>
#include <string_view>

namespace reqlens {

// Porter (1980) suffix-stripping stemmer, following the author's reference
// C implementation (which adds the bli->ble and logi->log rules). Input is
// expected to be lowercase ASCII letters; words of length <= 2 are returned
// unchanged.
class PorterStemmer {
 public:
  std::string operator()(std::string_view word) const {
    State s{std::string(word), 0, 0};
    if (s.b.size() <= 2) return s.b;
    s.k = static_cast<int>(s.b.size()) - 1;
    step1ab(s);
    if (s.k > 0) {
      step1c(s);
      step2(s);
      step3(s);
      step4(s);
      step5(s);
    }
    s.b.resize(static_cast<std::size_t>(s.k) + 1);
    return s.b;
  }

 private:
  struct State {
    std::string b;
    int k;  // end of the current word
    int j;  // end of the stem left by the last successful ends()
  };

  static bool cons(const State& s, int i) {
    switch (s.b[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        return false;
      case 'y':
        return i == 0 ? true : !cons(s, i - 1);
      default:
        return true;
    }
  }

  // Number of VC sequences in b[0..j].
  static int measure(const State& s) {
    int n = 0;
    int i = 0;
    for (;;) {
      if (i > s.j) return n;
      if (!cons(s, i)) break;
      ++i;
    }
    ++i;
    for (;;) {
      for (;;) {
        if (i > s.j) return n;
        if (cons(s, i)) break;
        ++i;
      }
      ++i;
      ++n;
      for (;;) {
        if (i > s.j) return n;
        if (!cons(s, i)) break;
        ++i;
      }
      ++i;
    }
  }

  static bool vowel_in_stem(const State& s) {
    for (int i = 0; i <= s.j; ++i) {
      if (!cons(s, i)) return true;
    }
    return false;
  }

  static bool double_cons(const State& s, int j) {
    if (j < 1) return false;
    if (s.b[j] != s.b[j - 1]) return false;
    return cons(s, j);
  }

  // consonant-vowel-consonant ending at i, where the last is not w, x or y
  static bool cvc(const State& s, int i) {
    if (i < 2 || !cons(s, i) || cons(s, i - 1) || !cons(s, i - 2)) return false;
    const char ch = s.b[i];
    return !(ch == 'w' || ch == 'x' || ch == 'y');
  }

  static bool ends(State& s, std::string_view suffix) {
    const int len = static_cast<int>(suffix.size());
    if (len > s.k + 1) return false;
    if (std::string_view(s.b).substr(static_cast<std::size_t>(s.k - len + 1),
                                     suffix.size()) != suffix) {
      return false;
    }
    s.j = s.k - len;
    return true;
  }

  static void set_to(State& s, std::string_view replacement) {
    const int len = static_cast<int>(replacement.size());
    s.b.replace(static_cast<std::size_t>(s.j + 1), std::string::npos, replacement);
    s.k = s.j + len;
  }

  static void replace_if_measured(State& s, std::string_view replacement) {
    if (measure(s) > 0) set_to(s, replacement);
  }

  static void step1ab(State& s) {
    if (s.b[s.k] == 's') {
      if (ends(s, "sses")) {
        s.k -= 2;
      } else if (ends(s, "ies")) {
        set_to(s, "i");
      } else if (s.b[s.k - 1] != 's') {
        --s.k;
      }
    }
    if (ends(s, "eed")) {
      if (measure(s) > 0) --s.k;
    } else if ((ends(s, "ed") || ends(s, "ing")) && vowel_in_stem(s)) {
      s.k = s.j;
      if (ends(s, "at")) {
        set_to(s, "ate");
      } else if (ends(s, "bl")) {
        set_to(s, "ble");
      } else if (ends(s, "iz")) {
        set_to(s, "ize");
      } else if (double_cons(s, s.k)) {
        --s.k;
        const char ch = s.b[s.k];
        if (ch == 'l' || ch == 's' || ch == 'z') ++s.k;
      } else if (s.j = s.k; measure(s) == 1 && cvc(s, s.k)) {
        set_to(s, "e");
      }
    }
    s.b.resize(static_cast<std::size_t>(s.k) + 1);
  }

  static void step1c(State& s) {
    if (ends(s, "y") && vowel_in_stem(s)) s.b[s.k] = 'i';
  }

  struct Rule {
    std::string_view suffix;
    std::string_view replacement;
  };

  template <std::size_t N>
  static void apply_first(State& s, const Rule (&rules)[N]) {
    for (const auto& r : rules) {
      if (ends(s, r.suffix)) {
        replace_if_measured(s, r.replacement);
        return;
      }
    }
  }

  static void step2(State& s) {
    if (s.k < 1) return;
    switch (s.b[s.k - 1]) {
      case 'a': {
        static constexpr Rule r[] = {{"ational", "ate"}, {"tional", "tion"}};
        apply_first(s, r);
        break;
      }
      case 'c': {
        static constexpr Rule r[] = {{"enci", "ence"}, {"anci", "ance"}};
        apply_first(s, r);
        break;
      }
      case 'e': {
        static constexpr Rule r[] = {{"izer", "ize"}};
        apply_first(s, r);
        break;
      }
      case 'l': {
        static constexpr Rule r[] = {{"bli", "ble"},
                                     {"alli", "al"},
                                     {"entli", "ent"},
                                     {"eli", "e"},
                                     {"ousli", "ous"}};
        apply_first(s, r);
        break;
      }
      case 'o': {
        static constexpr Rule r[] = {
            {"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}};
        apply_first(s, r);
        break;
      }
      case 's': {
        static constexpr Rule r[] = {{"alism", "al"},
                                     {"iveness", "ive"},
                                     {"fulness", "ful"},
                                     {"ousness", "ous"}};
        apply_first(s, r);
        break;
      }
      case 't': {
        static constexpr Rule r[] = {
            {"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}};
        apply_first(s, r);
        break;
      }
      case 'g': {
        static constexpr Rule r[] = {{"logi", "log"}};
        apply_first(s, r);
        break;
      }
      default:
        break;
    }
  }

  static void step3(State& s) {
    switch (s.b[s.k]) {
      case 'e': {
        static constexpr Rule r[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}};
        apply_first(s, r);
        break;
      }
      case 'i': {
        static constexpr Rule r[] = {{"iciti", "ic"}};
        apply_first(s, r);
        break;
      }
      case 'l': {
        static constexpr Rule r[] = {{"ical", "ic"}, {"ful", ""}};
        apply_first(s, r);
        break;
      }
      case 's': {
        static constexpr Rule r[] = {{"ness", ""}};
        apply_first(s, r);
        break;
      }
      default:
        break;
    }
  }

  static bool any_ends(State& s, std::initializer_list<std::string_view> suffixes) {
    for (auto suffix : suffixes) {
      if (ends(s, suffix)) return true;
    }
    return false;
  }

  static void step4(State& s) {
    if (s.k < 1) return;
    bool matched = false;
    switch (s.b[s.k - 1]) {
      case 'a': matched = ends(s, "al"); break;
      case 'c': matched = any_ends(s, {"ance", "ence"}); break;
      case 'e': matched = ends(s, "er"); break;
      case 'i': matched = ends(s, "ic"); break;
      case 'l': matched = any_ends(s, {"able", "ible"}); break;
      case 'n': matched = any_ends(s, {"ant", "ement", "ment", "ent"}); break;
      case 'o':
        if (ends(s, "ion") && s.j >= 0 && (s.b[s.j] == 's' || s.b[s.j] == 't')) {
          matched = true;
        } else {
          matched = ends(s, "ou");
        }
        break;
      case 's': matched = ends(s, "ism"); break;
      case 't': matched = any_ends(s, {"ate", "iti"}); break;
      case 'u': matched = ends(s, "ous"); break;
      case 'v': matched = ends(s, "ive"); break;
      case 'z': matched = ends(s, "ize"); break;
      default: break;
    }
    if (matched && measure(s) > 1) s.k = s.j;
  }

  static void step5(State& s) {
    s.j = s.k;
    if (s.b[s.k] == 'e') {
      const int a = measure(s);
      if (a > 1 || (a == 1 && !cvc(s, s.k - 1))) --s.k;
    }
    if (s.b[s.k] == 'l' && double_cons(s, s.k) && measure(s) > 1) --s.k;
  }
};

inline std::string porter_stem(std::string_view word) {
  return PorterStemmer{}(word);
}

}  // namespace reqlens
