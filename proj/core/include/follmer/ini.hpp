#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace follmer::cli {

/// Flat "[section]" / "key = value" text. '#' and ';' start comments; keys
/// outside a section are rejected. Values keep their inner whitespace.
class IniFile {
public:
  struct Entry {
    std::string value;
    std::size_t line = 0; // 0 for command-line overrides
  };
  using Section = std::map<std::string, Entry>;

  static IniFile parse(std::istream& in, const std::string& name = "<config>");
  static IniFile load(const std::string& path);

  //! "section.key=value"; replaces or adds the entry.
  void set_override(const std::string& assignment);
  void set(const std::string& section, const std::string& key, const std::string& value);

  bool has(const std::string& section, const std::string& key) const;
  const std::string* find(const std::string& section, const std::string& key) const;
  const std::map<std::string, Section>& sections() const { return sections_; }
  const std::string& name() const { return name_; }

  //! Canonical text: sections and keys sorted, one "key = value" per line.
  std::string canonical() const;

private:
  std::string name_;
  std::map<std::string, Section> sections_;
};

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

} // namespace follmer::cli
