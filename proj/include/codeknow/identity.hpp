#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "codeknow/errors.hpp"

namespace codeknow {

/// A raw author pair as it appears in commit metadata.
struct RawAuthor {
    std::string name;
    std::string email;

    auto operator<=>(const RawAuthor&) const = default;
};

/// A canonical developer. Every observed RawAuthor maps to exactly one.
struct DeveloperIdentity {
    std::string canonicalId;
    std::string displayName;
    std::string email;
    std::set<RawAuthor> aliases;

    bool operator==(const DeveloperIdentity&) const = default;
};

/// Manual merge rules, keyed by lowercased alias email -> lowercased canonical email.
using AliasOverrides = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace detail

/// Identity key of a raw author: the lowercased email, or the name when the
/// email is blank.
inline std::string identityKey(const RawAuthor& a)
{
    auto email = detail::lower(detail::trim(a.email));
    if (!email.empty())
        return email;
    return "name:" + detail::trim(a.name);
}

/// Parses the alias override format: one `canonical_email <- alias_email`
/// rule per line. Blank lines and lines starting with '#' are ignored.
inline AliasOverrides parseAliasOverrides(std::istream& in)
{
    AliasOverrides rules;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        auto t = detail::trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        auto arrow = t.find("<-");
        if (arrow == std::string::npos)
            throw ValidationError("alias file line " + std::to_string(lineNo) + ": expected 'canonical <- alias'");
        auto canonical = detail::lower(detail::trim(t.substr(0, arrow)));
        auto alias = detail::lower(detail::trim(t.substr(arrow + 2)));
        if (canonical.empty() || alias.empty())
            throw ValidationError("alias file line " + std::to_string(lineNo) + ": empty email");
        rules[alias] = canonical;
    }
    return rules;
}

inline AliasOverrides loadAliasOverrides(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot read alias file " + path);
    return parseAliasOverrides(in);
}

/// Partition of raw authors into canonical developers.
class IdentityMap {
public:
    const std::vector<DeveloperIdentity>& identities() const { return identities_; }

    /// canonicalId for a raw author; throws std::out_of_range for unseen pairs.
    const std::string& canonicalId(const RawAuthor& a) const { return byKey_.at(identityKey(a)); }

    const DeveloperIdentity* find(const std::string& canonicalId) const
    {
        auto it = index_.find(canonicalId);
        return it == index_.end() ? nullptr : &identities_[it->second];
    }

private:
    friend IdentityMap resolveIdentities(const std::vector<RawAuthor>&, const AliasOverrides&);

    std::vector<DeveloperIdentity> identities_;
    std::map<std::string, std::string> byKey_;
    std::map<std::string, size_t> index_;
};

/// Merges raw authors that share a lowercased email, plus any manual rules.
/// The display name of a developer is the name of its first alias in input
/// order; identities are returned sorted by canonicalId.
inline IdentityMap resolveIdentities(const std::vector<RawAuthor>& raw,
                                     const AliasOverrides& overrides = {})
{
    auto resolve = [&](std::string key) {
        std::set<std::string> seen;
        for (auto it = overrides.find(key); it != overrides.end() && seen.insert(key).second;
             it = overrides.find(key))
            key = it->second;
        return key;
    };

    IdentityMap map;
    std::map<std::string, DeveloperIdentity> groups;
    for (const auto& a : raw) {
        auto key = identityKey(a);
        auto canonical = resolve(key);
        auto& dev = groups[canonical];
        if (dev.canonicalId.empty()) {
            dev.canonicalId = canonical;
            dev.displayName = detail::trim(a.name);
            dev.email = canonical.rfind("name:", 0) == 0 ? std::string{} : canonical;
        }
        dev.aliases.insert(a);
        map.byKey_[key] = canonical;
    }
    for (auto& [id, dev] : groups) {
        map.index_[id] = map.identities_.size();
        map.identities_.push_back(std::move(dev));
    }
    return map;
}

} // namespace codeknow
