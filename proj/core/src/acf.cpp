#include "pvgate/acf/acf.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace pvgate::acf {

const char* to_string(Level l) { return l == Level::Write ? "WRITE" : "READ"; }

ParseError::ParseError(const std::string& msg, int line_, int col_)
    : std::runtime_error(msg + " at line " + std::to_string(line_) + ", col " +
                         std::to_string(col_)),
      line(line_),
      col(col_) {}

UndefinedGroupError::UndefinedGroupError(const std::string& group_, int line_, int col_)
    : ParseError("undefined group '" + group_ + "'", line_, col_), group(group_) {}

MergeConflictError::MergeConflictError(const std::string& name_)
    : std::runtime_error("merge conflict on '" + name_ + "'"), name(name_) {}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' ||
         c == '.' || c == '-';
}

// Hand-rolled scanner with line/column tracking for error reporting.
class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      fail(std::string("expected '") + c + "'");
    }
    advance();
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      advance();
      return true;
    }
    return false;
  }

  std::string word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && name_char(text_[pos_])) advance();
    if (pos_ == start) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, col_); }

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct GroupRef {
  std::string name;
  bool is_uag;
  int line;
  int col;
};

}  // namespace

Config parse_acf(std::string_view text) {
  Config cfg;
  Lexer lx(text);
  std::vector<GroupRef> refs;

  while (!lx.eof()) {
    std::string kw = lx.word();
    if (kw == "UAG" || kw == "HAG") {
      const bool is_uag = kw == "UAG";
      lx.expect('(');
      std::string name = lx.word();
      lx.expect(')');
      lx.expect('{');
      auto& members = is_uag ? cfg.uags[name] : cfg.hags[name];
      if (lx.peek() != '}') {
        do {
          std::string m = lx.word();
          members.insert(is_uag ? m : lower(m));
        } while (lx.accept(','));
      }
      lx.expect('}');
    } else if (kw == "ASG") {
      lx.expect('(');
      std::string name = lx.word();
      lx.expect(')');
      lx.expect('{');
      auto& rules = cfg.asgs[name];
      while (lx.peek() != '}') {
        std::string rk = lx.word();
        if (rk != "RULE") lx.fail("expected RULE");
        lx.expect('(');
        std::string asl = lx.word();
        lx.expect(',');
        std::string lvl = lx.word();
        lx.expect(')');
        Rule rule;
        try {
          rule.asl = std::stoi(asl);
        } catch (const std::exception&) {
          lx.fail("expected a numeric access level");
        }
        if (lvl == "READ") {
          rule.level = Level::Read;
        } else if (lvl == "WRITE") {
          rule.level = Level::Write;
        } else {
          lx.fail("expected READ or WRITE");
        }
        if (lx.accept('{')) {
          if (lx.peek() != '}') {
            do {
              std::string ck = lx.word();
              if (ck != "UAG" && ck != "HAG") lx.fail("expected UAG or HAG clause");
              lx.expect('(');
              int rline = lx.line(), rcol = lx.col();
              std::string gname = lx.word();
              lx.expect(')');
              refs.push_back({gname, ck == "UAG", rline, rcol});
              if (ck == "UAG") {
                rule.uags.push_back(gname);
              } else {
                rule.hags.push_back(gname);
              }
            } while (lx.accept(','));
          }
          lx.expect('}');
        }
        rules.push_back(std::move(rule));
      }
      lx.expect('}');
    } else {
      lx.fail("expected UAG, HAG or ASG");
    }
  }

  for (const auto& ref : refs) {
    const auto& groups = ref.is_uag ? cfg.uags : cfg.hags;
    if (!groups.contains(ref.name)) {
      throw UndefinedGroupError(ref.name, ref.line, ref.col);
    }
  }

  cfg.asgs.try_emplace("DEFAULT");  // DEFAULT always exists
  return cfg;
}

std::string render_acf(const Config& c) {
  std::ostringstream out;
  for (const auto& [name, members] : c.uags) {
    out << "UAG(" << name << "){";
    bool first = true;
    for (const auto& m : members) {
      if (!first) out << ",";
      out << m;
      first = false;
    }
    out << "}\n";
  }
  for (const auto& [name, members] : c.hags) {
    out << "HAG(" << name << "){";
    bool first = true;
    for (const auto& m : members) {
      if (!first) out << ",";
      out << m;
      first = false;
    }
    out << "}\n";
  }
  for (const auto& [name, rules] : c.asgs) {
    out << "ASG(" << name << "){";
    for (const auto& r : rules) {
      out << " RULE(" << r.asl << "," << to_string(r.level) << ")";
      if (!r.uags.empty() || !r.hags.empty()) {
        out << "{";
        bool first = true;
        for (const auto& u : r.uags) {
          if (!first) out << ",";
          out << "UAG(" << u << ")";
          first = false;
        }
        for (const auto& h : r.hags) {
          if (!first) out << ",";
          out << "HAG(" << h << ")";
          first = false;
        }
        out << "}";
      }
    }
    out << " }\n";
  }
  return out.str();
}

namespace {

void merge_groups(std::map<std::string, std::set<std::string>>& into,
                  const std::map<std::string, std::set<std::string>>& from,
                  MergeMode mode) {
  for (const auto& [name, members] : from) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, members);
    } else if (mode == MergeMode::Strict && it->second != members) {
      throw MergeConflictError(name);
    } else {
      it->second.insert(members.begin(), members.end());
    }
  }
}

}  // namespace

Config merge_acf(const std::vector<Config>& configs, MergeMode mode) {
  if (configs.empty()) throw std::invalid_argument("merge_acf needs at least one config");
  if (configs.size() == 1) {
    Config out = configs.front();
    out.asgs.try_emplace("DEFAULT");
    return out;
  }

  Config out;
  for (const Config& c : configs) {
    merge_groups(out.uags, c.uags, mode);
    merge_groups(out.hags, c.hags, mode);
  }

  std::set<std::string> names;
  for (const Config& c : configs) {
    for (const auto& [name, rules] : c.asgs) names.insert(name);
  }

  for (const auto& name : names) {
    std::vector<Rule> merged;
    const std::vector<Rule>* first_defined = nullptr;
    for (const Config& c : configs) {
      const std::vector<Rule>* contrib = nullptr;
      auto it = c.asgs.find(name);
      if (it != c.asgs.end()) {
        // A synthesized empty DEFAULT is absence, not a conflicting body.
        const bool ignorable = name == "DEFAULT" && it->second.empty();
        if (mode == MergeMode::Strict && !ignorable) {
          if (first_defined && !(*first_defined == it->second)) {
            throw MergeConflictError(name);
          }
          first_defined = &it->second;
        }
        contrib = &it->second;
      } else {
        // A config without this ASG answered such queries through its
        // DEFAULT rules; fold them in so no grant is lost by merging.
        auto dit = c.asgs.find("DEFAULT");
        if (dit != c.asgs.end()) contrib = &dit->second;
      }
      if (!contrib) continue;
      for (const auto& r : *contrib) {
        if (std::find(merged.begin(), merged.end(), r) == merged.end()) {
          merged.push_back(r);
        }
      }
    }
    out.asgs[name] = std::move(merged);
  }
  out.asgs.try_emplace("DEFAULT");
  return out;
}

Config augment_for_gateway(const Config& c, const proto::Identity& gateway) {
  Config out = c;
  const std::string host = lower(gateway.host);
  for (const auto& [asg, rules] : out.asgs) {
    for (const auto& rule : rules) {
      if (rule.level != Level::Write) continue;
      for (const auto& u : rule.uags) out.uags[u].insert(gateway.user);
      if (!host.empty()) {
        for (const auto& h : rule.hags) out.hags[h].insert(host);
      }
    }
  }
  return out;
}

Decision evaluate(const Config& c, std::string_view asg, const proto::Identity& who,
                  Level level) {
  auto it = c.asgs.find(std::string(asg));
  if (it == c.asgs.end()) it = c.asgs.find("DEFAULT");
  if (it == c.asgs.end()) return {};

  const std::string host = lower(who.host);
  for (std::size_t i = 0; i < it->second.size(); ++i) {
    const Rule& r = it->second[i];
    if (level == Level::Write && r.level != Level::Write) continue;
    if (!r.uags.empty()) {
      bool member = false;
      for (const auto& u : r.uags) {
        auto g = c.uags.find(u);
        if (g != c.uags.end() && g->second.contains(who.user)) {
          member = true;
          break;
        }
      }
      if (!member) continue;
    }
    if (!r.hags.empty()) {
      bool member = false;
      for (const auto& h : r.hags) {
        auto g = c.hags.find(h);
        if (g != c.hags.end() && g->second.contains(host)) {
          member = true;
          break;
        }
      }
      if (!member) continue;
    }
    return Decision{true, it->first, static_cast<int>(i)};
  }
  return {};
}

}  // namespace pvgate::acf
