#include "qdgen/relation_template.hpp"

namespace qdgen {

int RelationTemplate::field_by_name(const std::string& n) const {
    for (size_t i = 0; i < fields.size(); ++i)
        if (fields[i].name == n) return static_cast<int>(i);
    return -1;
}

int RelationTemplate::field_by_src(const std::string& alias, const std::string& col) const {
    for (size_t i = 0; i < fields.size(); ++i)
        if (fields[i].src_alias == alias && fields[i].src_col == col) return static_cast<int>(i);
    return -1;
}

smt::NodePtr RelationTemplate::field_term(int field, const smt::NodePtr& idx) const {
    return smt::app(fields.at(field).accessor, {smt::select(array_sym, idx)});
}

smt::NodePtr RelationTemplate::cnt_term(const smt::NodePtr& idx) const {
    return field_term(cnt_index, idx);
}

smt::NodePtr RelationTemplate::valid(const smt::NodePtr& idx) const {
    return smt::app(">", {cnt_term(idx), smt::ilit(0)});
}

std::string sanitize_symbol(const std::string& s) {
    std::string out;
    for (char c : s) {
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
            c == '_')
            out += c;
        else
            out += '_';
    }
    if (out.empty() || (out[0] >= '0' && out[0] <= '9')) out = "s_" + out;
    return out;
}

std::string NameRegistry::fresh(const std::string& base) {
    std::string b = sanitize_symbol(base);
    auto it = used_.find(b);
    if (it == used_.end()) {
        used_[b] = 1;
        return b;
    }
    while (true) {
        std::string cand = b + "_" + std::to_string(it->second++);
        if (!used_.count(cand)) {
            used_[cand] = 1;
            return cand;
        }
    }
}

}  // namespace qdgen
