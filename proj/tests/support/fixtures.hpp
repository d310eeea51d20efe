#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <optloop/compiler.hpp>
#include <optloop/five_element.hpp>

namespace optloop::test {

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline std::string fixture_path(const std::string& name) {
    return std::string(OPTLOOP_FIXTURE_DIR) + "/" + name;
}

inline std::string testdata_path(const std::string& name) {
    return std::string(OPTLOOP_TESTDATA_DIR) + "/" + name;
}

inline std::string fixture_text(const std::string& name) {
    return read_file(fixture_path(name));
}

inline FiveElementModel fixture_model(const std::string& name) {
    auto r = parse_five_element(fixture_text(name));
    if (!r.ok())
        throw std::runtime_error("fixture " + name + " failed to parse:\n" +
                                 diagnostics_to_string(r.diagnostics));
    return *r.model;
}

inline CanonicalModel fixture_canonical(const std::string& name) {
    auto c = compile(fixture_model(name));
    if (!c.ok())
        throw std::runtime_error("fixture " + name + " failed to compile:\n" +
                                 diagnostics_to_string(c.diagnostics));
    return *c.model;
}

}  // namespace optloop::test
