#include "follmer/ini.hpp"

#include "follmer/types.hpp"

#include <fstream>
#include <sstream>

namespace follmer::cli {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream is(s);
  while (std::getline(is, part, sep)) {
    part = trim(part);
    if (!part.empty()) {
      out.push_back(part);
    }
  }
  return out;
}

IniFile IniFile::parse(std::istream& in, const std::string& name) {
  IniFile ini;
  ini.name_ = name;
  std::string current;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(name + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto cut = line.find_first_of("#;");
    if (cut != std::string::npos) {
      line.resize(cut);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail("unterminated section header");
      }
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) {
        fail("empty section name");
      }
      ini.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail("expected 'key = value'");
    }
    if (current.empty()) {
      fail("key outside a [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      fail("empty key");
    }
    auto& sec = ini.sections_[current];
    if (sec.count(key)) {
      fail("duplicate key '" + key + "' in [" + current + "]");
    }
    sec[key] = {trim(line.substr(eq + 1)), line_no};
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config file: " + path);
  }
  return parse(in, path);
}

void IniFile::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw Error("override '" + assignment + "' must look like section.key=value");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  if (section.empty() || key.empty()) {
    throw Error("override '" + assignment + "' must look like section.key=value");
  }
  set(section, key, trim(assignment.substr(eq + 1)));
}

void IniFile::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = {value, 0};
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const std::string* IniFile::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) {
    return nullptr;
  }
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second.value;
}

std::string IniFile::canonical() const {
  std::ostringstream os;
  for (const auto& [sec, entries] : sections_) {
    os << '[' << sec << "]\n";
    for (const auto& [key, entry] : entries) {
      os << key << " = " << entry.value << '\n';
    }
  }
  return os.str();
}

} // namespace follmer::cli
