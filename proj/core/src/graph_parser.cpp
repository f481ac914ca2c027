#include "cypherforge/graph/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include <fmt/format.h>

namespace cypherforge::graph {

namespace {

using namespace ast;

enum class TokKind { Ident, Integer, Float, String, Punct, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;   // raw text; string tokens hold the decoded value
    std::string upper;  // uppercased, for keyword matching
    size_t offset = 0;
};

[[noreturn]] void fail(QueryErrorKind kind, const Token& tok, const std::string& message) {
    throw QueryError(kind, tok.text, tok.offset, fmt::format("{} (at offset {})", message,
                                                             tok.offset));
}

// Clause starters and operators that the subset deliberately rejects.
const std::set<std::string>& unsupported_keywords() {
    static const std::set<std::string> kws = {
        "UNION",  "FOREACH", "CASE",   "CALL",       "DELETE", "DETACH",
        "REMOVE", "UNWIND",  "BEGIN",  "COMMIT",     "ROLLBACK", "DROP",
        "INDEX",  "CONSTRAINT", "XOR", "LOAD",       "USE",    "SHOW",
        "PROFILE", "EXPLAIN",
    };
    return kws;
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { tokenize(); }

    const std::vector<Token>& tokens() const { return tokens_; }

private:
    void tokenize() {
        size_t i = 0;
        const std::string& s = text_;
        while (i < s.size()) {
            char c = s[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
                while (i < s.size() && s[i] != '\n') ++i;
                continue;
            }
            if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
                size_t close = s.find("*/", i + 2);
                if (close == std::string::npos) {
                    Token t{TokKind::Punct, "/*", "/*", i};
                    fail(QueryErrorKind::Syntax, t, "unterminated block comment");
                }
                i = close + 2;
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                size_t start = i;
                while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) ||
                                        s[i] == '_')) {
                    ++i;
                }
                push(TokKind::Ident, s.substr(start, i - start), start);
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                size_t start = i;
                bool is_float = false;
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                // Disambiguate `1..3` range dots from a decimal point.
                if (i + 1 < s.size() && s[i] == '.' &&
                    std::isdigit(static_cast<unsigned char>(s[i + 1])) && s[i + 1] != '.') {
                    is_float = true;
                    ++i;
                    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                }
                if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                    size_t j = i + 1;
                    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                    if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
                        is_float = true;
                        i = j;
                        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
                            ++i;
                    }
                }
                push(is_float ? TokKind::Float : TokKind::Integer, s.substr(start, i - start),
                     start);
                continue;
            }
            if (c == '\'' || c == '"') {
                size_t start = i;
                std::string out;
                ++i;
                bool closed = false;
                while (i < s.size()) {
                    if (s[i] == '\\' && i + 1 < s.size()) {
                        char esc = s[i + 1];
                        switch (esc) {
                            case 'n': out += '\n'; break;
                            case 't': out += '\t'; break;
                            case 'r': out += '\r'; break;
                            case '\\': out += '\\'; break;
                            case '\'': out += '\''; break;
                            case '"': out += '"'; break;
                            default: out += esc; break;
                        }
                        i += 2;
                        continue;
                    }
                    if (s[i] == c) {
                        closed = true;
                        ++i;
                        break;
                    }
                    out += s[i++];
                }
                if (!closed) {
                    Token t{TokKind::String, out, "", start};
                    fail(QueryErrorKind::Syntax, t, "unterminated string literal");
                }
                Token t{TokKind::String, std::move(out), "", start};
                tokens_.push_back(std::move(t));
                continue;
            }
            if (c == '$') {
                Token t{TokKind::Punct, "$", "$", i};
                fail(QueryErrorKind::Unsupported, t, "query parameters are not supported");
            }
            if (c == '`') {
                Token t{TokKind::Punct, "`", "`", i};
                fail(QueryErrorKind::Unsupported, t, "backquoted identifiers are not supported");
            }
            // multi-char punctuation
            static const char* two_char[] = {"<=", ">=", "<>", "->", "<-", "..", "=~", "+="};
            bool matched = false;
            for (const char* op : two_char) {
                if (s.compare(i, 2, op) == 0) {
                    push(TokKind::Punct, op, i);
                    i += 2;
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
            static const std::string singles = "()[]{},:;.+-*/%=<>|!";
            if (singles.find(c) != std::string::npos) {
                push(TokKind::Punct, std::string(1, c), i);
                ++i;
                continue;
            }
            Token t{TokKind::Punct, std::string(1, c), std::string(1, c), i};
            fail(QueryErrorKind::Syntax, t, fmt::format("unexpected character '{}'", c));
        }
        tokens_.push_back(Token{TokKind::End, "", "", s.size()});
    }

    void push(TokKind kind, std::string text, size_t offset) {
        std::string upper = text;
        std::transform(upper.begin(), upper.end(), upper.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        tokens_.push_back(Token{kind, std::move(text), std::move(upper), offset});
    }

    const std::string& text_;
    std::vector<Token> tokens_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text), lexer_(text) {}

    Query parse() {
        Query q;
        q.raw = text_;
        while (!at_end()) {
            if (is_punct(";")) {
                advance();
                if (at_end()) break;
                fail(QueryErrorKind::Unsupported, peek(),
                     "multiple statements in one query; split on ';' first");
            }
            q.clauses.push_back(parse_clause());
        }
        if (q.clauses.empty()) {
            fail(QueryErrorKind::Syntax, peek(), "empty query");
        }
        check_scopes(q);
        return q;
    }

private:
    // --- token helpers ---

    const Token& peek(size_t ahead = 0) const {
        size_t i = std::min(pos_ + ahead, lexer_.tokens().size() - 1);
        return lexer_.tokens()[i];
    }
    const Token& advance() { return lexer_.tokens()[pos_++]; }
    bool at_end() const { return peek().kind == TokKind::End; }

    bool is_punct(std::string_view p, size_t ahead = 0) const {
        return peek(ahead).kind == TokKind::Punct && peek(ahead).text == p;
    }
    bool is_keyword(std::string_view kw, size_t ahead = 0) const {
        return peek(ahead).kind == TokKind::Ident && peek(ahead).upper == kw;
    }
    void expect_punct(std::string_view p, const char* context) {
        if (!is_punct(p)) {
            fail(QueryErrorKind::Syntax, peek(),
                 fmt::format("expected '{}' {}", p, context));
        }
        advance();
    }
    void expect_keyword(std::string_view kw) {
        if (!is_keyword(kw)) {
            fail(QueryErrorKind::Syntax, peek(), fmt::format("expected {}", kw));
        }
        advance();
    }
    std::string expect_ident(const char* context) {
        if (peek().kind != TokKind::Ident) {
            fail(QueryErrorKind::Syntax, peek(), fmt::format("expected identifier {}", context));
        }
        return advance().text;
    }

    void reject_unsupported_keyword() {
        if (peek().kind == TokKind::Ident && unsupported_keywords().count(peek().upper)) {
            fail(QueryErrorKind::Unsupported, peek(),
                 fmt::format("'{}' is outside the supported subset", peek().text));
        }
    }

    std::string slice(size_t begin_tok, size_t end_tok) const {
        const auto& toks = lexer_.tokens();
        size_t begin = toks[begin_tok].offset;
        size_t end = end_tok < toks.size() ? toks[end_tok].offset : text_.size();
        while (end > begin && std::isspace(static_cast<unsigned char>(text_[end - 1]))) --end;
        return text_.substr(begin, end - begin);
    }

    ExprPtr make(Expr e, size_t begin_tok) {
        e.text = slice(begin_tok, pos_);
        return std::make_shared<const Expr>(std::move(e));
    }

    // --- clauses ---

    Clause parse_clause() {
        reject_unsupported_keyword();
        if (is_keyword("OPTIONAL")) {
            advance();
            expect_keyword("MATCH");
            return parse_match(true);
        }
        if (is_keyword("MATCH")) {
            advance();
            return parse_match(false);
        }
        if (is_keyword("CREATE")) {
            advance();
            // CREATE INDEX / CREATE CONSTRAINT are DDL, not data.
            if (is_keyword("INDEX") || is_keyword("CONSTRAINT")) {
                fail(QueryErrorKind::Unsupported, peek(),
                     "schema DDL (CREATE INDEX/CONSTRAINT) is not supported");
            }
            CreateClause c;
            c.patterns.push_back(parse_pattern_part());
            while (is_punct(",")) {
                advance();
                c.patterns.push_back(parse_pattern_part());
            }
            return c;
        }
        if (is_keyword("MERGE")) {
            advance();
            MergeClause m;
            PatternPart part = parse_pattern_part();
            if (!part.edges.empty() || part.shortest_path || part.path_variable) {
                fail(QueryErrorKind::Unsupported, peek(),
                     "MERGE supports single-node patterns only");
            }
            m.node = part.nodes.at(0);
            return m;
        }
        if (is_keyword("SET")) {
            advance();
            SetClause sc;
            sc.items.push_back(parse_set_item());
            while (is_punct(",")) {
                advance();
                sc.items.push_back(parse_set_item());
            }
            return sc;
        }
        if (is_keyword("WITH")) {
            advance();
            WithClause w;
            w.projection = parse_projection(/*allow_where=*/true);
            return w;
        }
        if (is_keyword("RETURN")) {
            advance();
            ReturnClause r;
            r.projection = parse_projection(/*allow_where=*/false);
            return r;
        }
        fail(QueryErrorKind::Syntax, peek(),
             fmt::format("expected a clause, got '{}'", peek().text));
    }

    MatchClause parse_match(bool optional) {
        MatchClause m;
        m.optional = optional;
        m.patterns.push_back(parse_pattern_part());
        while (is_punct(",")) {
            advance();
            m.patterns.push_back(parse_pattern_part());
        }
        if (is_keyword("WHERE")) {
            advance();
            m.where = parse_expr();
        }
        return m;
    }

    SetItem parse_set_item() {
        SetItem item;
        item.variable = expect_ident("in SET");
        expect_punct(".", "in SET item");
        item.property = expect_ident("after '.' in SET");
        if (is_punct("+=")) {
            fail(QueryErrorKind::Unsupported, peek(), "SET += is not supported");
        }
        expect_punct("=", "in SET item");
        item.value = parse_expr();
        return item;
    }

    Projection parse_projection(bool allow_where) {
        Projection p;
        if (is_keyword("DISTINCT")) {
            advance();
            p.distinct = true;
        }
        if (is_punct("*")) {
            fail(QueryErrorKind::Unsupported, peek(), "RETURN * is not supported");
        }
        p.items.push_back(parse_projection_item());
        while (is_punct(",")) {
            advance();
            p.items.push_back(parse_projection_item());
        }
        if (allow_where && is_keyword("WHERE")) {
            advance();
            p.where = parse_expr();
        }
        if (is_keyword("ORDER")) {
            advance();
            expect_keyword("BY");
            p.order_by.push_back(parse_sort_item());
            while (is_punct(",")) {
                advance();
                p.order_by.push_back(parse_sort_item());
            }
        }
        if (is_keyword("SKIP")) {
            advance();
            p.skip = parse_count("SKIP");
        }
        if (is_keyword("LIMIT")) {
            advance();
            p.limit = parse_count("LIMIT");
        }
        return p;
    }

    ProjectionItem parse_projection_item() {
        ProjectionItem item;
        item.expr = parse_expr();
        if (is_keyword("AS")) {
            advance();
            item.alias = expect_ident("after AS");
        }
        return item;
    }

    SortItem parse_sort_item() {
        SortItem item;
        item.expr = parse_expr();
        if (is_keyword("ASC") || is_keyword("ASCENDING")) {
            advance();
        } else if (is_keyword("DESC") || is_keyword("DESCENDING")) {
            advance();
            item.ascending = false;
        }
        return item;
    }

    int64_t parse_count(const char* what) {
        if (peek().kind != TokKind::Integer) {
            fail(QueryErrorKind::Syntax, peek(),
                 fmt::format("{} expects a non-negative integer literal", what));
        }
        int64_t v = 0;
        auto text = advance().text;
        std::from_chars(text.data(), text.data() + text.size(), v);
        return v;
    }

    // --- patterns ---

    PatternPart parse_pattern_part() {
        PatternPart part;
        if (peek().kind == TokKind::Ident && is_punct("=", 1) &&
            !unsupported_keywords().count(peek().upper)) {
            part.path_variable = advance().text;
            advance();  // '='
        }
        if (peek().kind == TokKind::Ident && peek().upper == "ALLSHORTESTPATHS") {
            fail(QueryErrorKind::Unsupported, peek(), "allShortestPaths is not supported");
        }
        if (peek().kind == TokKind::Ident && peek().upper == "SHORTESTPATH") {
            advance();
            part.shortest_path = true;
            expect_punct("(", "after shortestPath");
            parse_pattern_element(part);
            expect_punct(")", "closing shortestPath");
            if (part.edges.size() != 1) {
                fail(QueryErrorKind::Unsupported, peek(),
                     "shortestPath requires exactly one relationship pattern");
            }
            return part;
        }
        parse_pattern_element(part);
        return part;
    }

    void parse_pattern_element(PatternPart& part) {
        part.nodes.push_back(parse_node_pattern());
        while (is_punct("-") || is_punct("<-")) {
            part.edges.push_back(parse_edge_pattern());
            part.nodes.push_back(parse_node_pattern());
        }
    }

    NodePattern parse_node_pattern() {
        NodePattern n;
        expect_punct("(", "starting node pattern");
        if (peek().kind == TokKind::Ident) {
            n.variable = advance().text;
        }
        while (is_punct(":")) {
            advance();
            n.labels.push_back(expect_ident("as node label"));
        }
        if (is_punct("{")) {
            n.properties = parse_property_map();
        }
        expect_punct(")", "closing node pattern");
        return n;
    }

    EdgePattern parse_edge_pattern() {
        EdgePattern e;
        bool left_arrow = is_punct("<-");
        advance();  // '-' or '<-'
        bool bracketed = is_punct("[");
        if (bracketed) {
            advance();
            if (peek().kind == TokKind::Ident) {
                e.variable = advance().text;
            }
            if (is_punct(":")) {
                advance();
                e.types.push_back(expect_ident("as relationship type"));
                while (is_punct("|")) {
                    advance();
                    if (is_punct(":")) advance();
                    e.types.push_back(expect_ident("as relationship type"));
                }
            }
            if (is_punct("*")) {
                advance();
                VarLength vl;
                vl.min_hops = 1;
                vl.max_hops = 0;  // 0 = unbounded, capped later
                if (peek().kind == TokKind::Integer) {
                    vl.min_hops = static_cast<uint32_t>(parse_count("var-length min"));
                    vl.max_hops = vl.min_hops;
                }
                if (is_punct("..")) {
                    advance();
                    vl.max_hops = 0;
                    if (peek().kind == TokKind::Integer) {
                        vl.max_hops = static_cast<uint32_t>(parse_count("var-length max"));
                    }
                }
                e.var_length = vl;
            }
            if (is_punct("{")) {
                e.properties = parse_property_map();
            }
            expect_punct("]", "closing relationship pattern");
        }
        bool right_arrow = is_punct("->");
        if (right_arrow) {
            advance();
        } else {
            expect_punct("-", "after relationship pattern");
        }
        if (left_arrow && right_arrow) {
            fail(QueryErrorKind::Syntax, peek(), "relationship cannot point both ways");
        }
        e.direction = left_arrow ? Direction::Left
                                 : (right_arrow ? Direction::Right : Direction::Undirected);
        return e;
    }

    std::vector<std::pair<std::string, ExprPtr>> parse_property_map() {
        std::vector<std::pair<std::string, ExprPtr>> props;
        expect_punct("{", "starting property map");
        if (!is_punct("}")) {
            while (true) {
                std::string name = expect_ident("as property name");
                expect_punct(":", "in property map");
                props.emplace_back(std::move(name), parse_expr());
                if (!is_punct(",")) break;
                advance();
            }
        }
        expect_punct("}", "closing property map");
        return props;
    }

    // --- expressions ---

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        size_t begin = pos_;
        ExprPtr lhs = parse_and();
        while (is_keyword("OR")) {
            advance();
            ExprPtr rhs = parse_and();
            lhs = make(Expr{Binary{BinaryOp::Or, lhs, rhs}, ""}, begin);
        }
        return lhs;
    }

    ExprPtr parse_and() {
        size_t begin = pos_;
        ExprPtr lhs = parse_not();
        while (is_keyword("AND")) {
            advance();
            ExprPtr rhs = parse_not();
            lhs = make(Expr{Binary{BinaryOp::And, lhs, rhs}, ""}, begin);
        }
        return lhs;
    }

    ExprPtr parse_not() {
        size_t begin = pos_;
        if (is_keyword("NOT")) {
            advance();
            ExprPtr operand = parse_not();
            return make(Expr{Unary{UnaryOp::Not, operand}, ""}, begin);
        }
        return parse_comparison();
    }

    ExprPtr parse_comparison() {
        size_t begin = pos_;
        ExprPtr lhs = parse_additive();
        if (is_punct("=") || is_punct("<>") || is_punct("<") || is_punct(">") ||
            is_punct("<=") || is_punct(">=")) {
            std::string op = advance().text;
            static const std::map<std::string, BinaryOp> ops = {
                {"=", BinaryOp::Eq}, {"<>", BinaryOp::Ne}, {"<", BinaryOp::Lt},
                {">", BinaryOp::Gt}, {"<=", BinaryOp::Le}, {">=", BinaryOp::Ge}};
            ExprPtr rhs = parse_additive();
            if (is_punct("=") || is_punct("<>") || is_punct("<") || is_punct(">") ||
                is_punct("<=") || is_punct(">=")) {
                fail(QueryErrorKind::Unsupported, peek(), "chained comparisons are not supported");
            }
            return make(Expr{Binary{ops.at(op), lhs, rhs}, ""}, begin);
        }
        if (is_punct("=~")) {
            fail(QueryErrorKind::Unsupported, peek(), "regular-expression match is not supported");
        }
        if (is_keyword("IN")) {
            advance();
            ExprPtr rhs = parse_additive();
            return make(Expr{Binary{BinaryOp::In, lhs, rhs}, ""}, begin);
        }
        if (is_keyword("CONTAINS")) {
            advance();
            ExprPtr rhs = parse_additive();
            return make(Expr{Binary{BinaryOp::Contains, lhs, rhs}, ""}, begin);
        }
        if (is_keyword("STARTS")) {
            advance();
            expect_keyword("WITH");
            ExprPtr rhs = parse_additive();
            return make(Expr{Binary{BinaryOp::StartsWith, lhs, rhs}, ""}, begin);
        }
        if (is_keyword("ENDS")) {
            advance();
            expect_keyword("WITH");
            ExprPtr rhs = parse_additive();
            return make(Expr{Binary{BinaryOp::EndsWith, lhs, rhs}, ""}, begin);
        }
        if (is_keyword("IS")) {
            advance();
            bool negated = false;
            if (is_keyword("NOT")) {
                advance();
                negated = true;
            }
            expect_keyword("NULL");
            return make(Expr{IsNull{lhs, negated}, ""}, begin);
        }
        return lhs;
    }

    ExprPtr parse_additive() {
        size_t begin = pos_;
        ExprPtr lhs = parse_multiplicative();
        while (is_punct("+") || is_punct("-")) {
            BinaryOp op = advance().text == "+" ? BinaryOp::Add : BinaryOp::Sub;
            ExprPtr rhs = parse_multiplicative();
            lhs = make(Expr{Binary{op, lhs, rhs}, ""}, begin);
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        size_t begin = pos_;
        ExprPtr lhs = parse_unary();
        while (is_punct("*") || is_punct("/") || is_punct("%")) {
            std::string op = advance().text;
            BinaryOp bop = op == "*" ? BinaryOp::Mul : (op == "/" ? BinaryOp::Div : BinaryOp::Mod);
            ExprPtr rhs = parse_unary();
            lhs = make(Expr{Binary{bop, lhs, rhs}, ""}, begin);
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        size_t begin = pos_;
        if (is_punct("-")) {
            advance();
            ExprPtr operand = parse_unary();
            return make(Expr{Unary{UnaryOp::Minus, operand}, ""}, begin);
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        size_t begin = pos_;
        ExprPtr base = parse_primary();
        while (true) {
            if (is_punct(".")) {
                advance();
                std::string prop;
                if (peek().kind == TokKind::Ident) {
                    prop = advance().text;
                } else {
                    fail(QueryErrorKind::Syntax, peek(), "expected property name after '.'");
                }
                base = make(Expr{PropertyAccess{base, std::move(prop)}, ""}, begin);
                continue;
            }
            if (is_punct("[")) {
                fail(QueryErrorKind::Unsupported, peek(), "subscript access is not supported");
            }
            break;
        }
        return base;
    }

    ExprPtr parse_primary() {
        size_t begin = pos_;
        reject_unsupported_keyword();
        const Token& tok = peek();
        switch (tok.kind) {
            case TokKind::Integer: {
                int64_t v = 0;
                auto text = advance().text;
                std::from_chars(text.data(), text.data() + text.size(), v);
                return make(Expr{Literal{Value::integer(v)}, ""}, begin);
            }
            case TokKind::Float: {
                double v = std::stod(advance().text);
                return make(Expr{Literal{Value::floating(v)}, ""}, begin);
            }
            case TokKind::String: {
                return make(Expr{Literal{Value::text(advance().text)}, ""}, begin);
            }
            case TokKind::Ident: {
                if (tok.upper == "TRUE") {
                    advance();
                    return make(Expr{Literal{Value::boolean(true)}, ""}, begin);
                }
                if (tok.upper == "FALSE") {
                    advance();
                    return make(Expr{Literal{Value::boolean(false)}, ""}, begin);
                }
                if (tok.upper == "NULL") {
                    advance();
                    return make(Expr{Literal{Value::null()}, ""}, begin);
                }
                if (tok.upper == "SHORTESTPATH") {
                    fail(QueryErrorKind::Unsupported, tok,
                         "shortestPath is only valid as a MATCH pattern");
                }
                if (is_punct("(", 1)) {
                    return parse_function_call();
                }
                return make(Expr{Variable{advance().text}, ""}, begin);
            }
            case TokKind::Punct: {
                if (tok.text == "(") {
                    advance();
                    ExprPtr inner = parse_expr();
                    expect_punct(")", "closing parenthesized expression");
                    return inner;
                }
                if (tok.text == "[") {
                    advance();
                    ListLiteral lst;
                    if (!is_punct("]")) {
                        while (true) {
                            lst.items.push_back(parse_expr());
                            if (!is_punct(",")) break;
                            advance();
                        }
                    }
                    expect_punct("]", "closing list literal");
                    return make(Expr{std::move(lst), ""}, begin);
                }
                if (tok.text == "{") {
                    advance();
                    MapLiteral m;
                    if (!is_punct("}")) {
                        while (true) {
                            std::string name = expect_ident("as map key");
                            expect_punct(":", "in map literal");
                            m.entries.emplace_back(std::move(name), parse_expr());
                            if (!is_punct(",")) break;
                            advance();
                        }
                    }
                    expect_punct("}", "closing map literal");
                    return make(Expr{std::move(m), ""}, begin);
                }
                break;
            }
            default:
                break;
        }
        fail(QueryErrorKind::Syntax, tok, fmt::format("unexpected token '{}'", tok.text));
    }

    ExprPtr parse_function_call() {
        size_t begin = pos_;
        std::string name = advance().text;
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        expect_punct("(", "starting call");
        FnCall call;
        call.name = std::move(name);
        if (is_keyword("DISTINCT")) {
            advance();
            call.distinct = true;
        }
        if (is_punct("*")) {
            advance();
            call.star = true;
            if (call.name != "count") {
                fail(QueryErrorKind::Syntax, peek(), "'*' argument is only valid for count()");
            }
        } else if (!is_punct(")")) {
            while (true) {
                call.args.push_back(parse_expr());
                if (!is_punct(",")) break;
                advance();
            }
        }
        expect_punct(")", "closing call");
        return make(Expr{std::move(call), ""}, begin);
    }

    // --- scope checking ---

    void collect_vars(const ExprPtr& e, std::vector<std::string>& out) const {
        if (!e) return;
        if (const auto* v = std::get_if<Variable>(&e->node)) {
            out.push_back(v->name);
        } else if (const auto* pa = std::get_if<PropertyAccess>(&e->node)) {
            collect_vars(pa->base, out);
        } else if (const auto* lst = std::get_if<ListLiteral>(&e->node)) {
            for (const auto& item : lst->items) collect_vars(item, out);
        } else if (const auto* m = std::get_if<MapLiteral>(&e->node)) {
            for (const auto& [_, val] : m->entries) collect_vars(val, out);
        } else if (const auto* u = std::get_if<Unary>(&e->node)) {
            collect_vars(u->operand, out);
        } else if (const auto* b = std::get_if<Binary>(&e->node)) {
            collect_vars(b->lhs, out);
            collect_vars(b->rhs, out);
        } else if (const auto* n = std::get_if<IsNull>(&e->node)) {
            collect_vars(n->operand, out);
        } else if (const auto* f = std::get_if<FnCall>(&e->node)) {
            for (const auto& arg : f->args) collect_vars(arg, out);
        }
    }

    void require_bound(const ExprPtr& e, const std::set<std::string>& bound) const {
        std::vector<std::string> vars;
        collect_vars(e, vars);
        for (const auto& v : vars) {
            if (!bound.count(v)) {
                throw QueryError(QueryErrorKind::UnboundVariable, v, 0,
                                 fmt::format("variable '{}' is not bound", v));
            }
        }
    }

    void check_scopes(const Query& q) const {
        std::set<std::string> bound;
        for (const auto& clause : q.clauses) {
            if (const auto* m = std::get_if<MatchClause>(&clause)) {
                std::set<std::string> before = bound;
                for (const auto& part : m->patterns) {
                    if (part.path_variable) bound.insert(*part.path_variable);
                    for (const auto& n : part.nodes) {
                        for (const auto& [_, expr] : n.properties) require_bound(expr, before);
                        if (n.variable) bound.insert(*n.variable);
                    }
                    for (const auto& e : part.edges) {
                        for (const auto& [_, expr] : e.properties) require_bound(expr, before);
                        if (e.variable) bound.insert(*e.variable);
                    }
                }
                if (m->where) require_bound(m->where, bound);
            } else if (const auto* c = std::get_if<CreateClause>(&clause)) {
                std::set<std::string> before = bound;
                for (const auto& part : c->patterns) {
                    for (const auto& n : part.nodes) {
                        for (const auto& [_, expr] : n.properties) require_bound(expr, before);
                        if (n.variable) bound.insert(*n.variable);
                    }
                    for (const auto& e : part.edges) {
                        for (const auto& [_, expr] : e.properties) require_bound(expr, before);
                        if (e.variable) bound.insert(*e.variable);
                    }
                }
            } else if (const auto* mg = std::get_if<MergeClause>(&clause)) {
                for (const auto& [_, expr] : mg->node.properties) require_bound(expr, bound);
                if (mg->node.variable) bound.insert(*mg->node.variable);
            } else if (const auto* s = std::get_if<SetClause>(&clause)) {
                for (const auto& item : s->items) {
                    if (!bound.count(item.variable)) {
                        throw QueryError(QueryErrorKind::UnboundVariable, item.variable, 0,
                                         fmt::format("variable '{}' is not bound",
                                                     item.variable));
                    }
                    require_bound(item.value, bound);
                }
            } else if (const auto* w = std::get_if<WithClause>(&clause)) {
                bound = check_projection(w->projection, bound);
            } else if (const auto* r = std::get_if<ReturnClause>(&clause)) {
                check_projection(r->projection, bound);
            }
        }
    }

    std::set<std::string> check_projection(const Projection& p,
                                           const std::set<std::string>& bound) const {
        std::set<std::string> out;
        for (const auto& item : p.items) {
            require_bound(item.expr, bound);
            out.insert(item.output_name());
        }
        std::set<std::string> visible = bound;
        visible.insert(out.begin(), out.end());
        if (p.where) require_bound(p.where, visible);
        for (const auto& s : p.order_by) require_bound(s.expr, visible);
        return out;
    }

    const std::string& text_;
    Lexer lexer_;
    size_t pos_ = 0;
};

}  // namespace

bool ast::Query::has_return() const {
    return !clauses.empty() && std::holds_alternative<ast::ReturnClause>(clauses.back());
}

bool ast::Query::is_write() const {
    for (const auto& c : clauses) {
        if (std::holds_alternative<ast::CreateClause>(c) ||
            std::holds_alternative<ast::MergeClause>(c) ||
            std::holds_alternative<ast::SetClause>(c)) {
            return true;
        }
    }
    return false;
}

bool ast::is_aggregate_fn(std::string_view name) {
    return name == "count" || name == "sum" || name == "avg" || name == "min" ||
           name == "max" || name == "collect";
}

bool ast::contains_aggregate(const Expr& e) {
    if (const auto* f = std::get_if<FnCall>(&e.node)) {
        if (is_aggregate_fn(f->name)) return true;
        for (const auto& arg : f->args) {
            if (contains_aggregate(*arg)) return true;
        }
        return false;
    }
    if (const auto* pa = std::get_if<PropertyAccess>(&e.node)) {
        return contains_aggregate(*pa->base);
    }
    if (const auto* lst = std::get_if<ListLiteral>(&e.node)) {
        for (const auto& item : lst->items) {
            if (contains_aggregate(*item)) return true;
        }
        return false;
    }
    if (const auto* m = std::get_if<MapLiteral>(&e.node)) {
        for (const auto& [_, val] : m->entries) {
            if (contains_aggregate(*val)) return true;
        }
        return false;
    }
    if (const auto* u = std::get_if<Unary>(&e.node)) return contains_aggregate(*u->operand);
    if (const auto* b = std::get_if<Binary>(&e.node)) {
        return contains_aggregate(*b->lhs) || contains_aggregate(*b->rhs);
    }
    if (const auto* n = std::get_if<IsNull>(&e.node)) return contains_aggregate(*n->operand);
    return false;
}

ast::Query parse_cypher(const std::string& text) {
    Parser parser(text);
    return parser.parse();
}

std::vector<std::string> split_statements(const std::string& script) {
    std::vector<std::string> out;
    std::string current;
    size_t i = 0;
    char quote = 0;
    while (i < script.size()) {
        char c = script[i];
        if (quote) {
            current += c;
            if (c == '\\' && i + 1 < script.size()) {
                current += script[i + 1];
                i += 2;
                continue;
            }
            if (c == quote) quote = 0;
            ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            current += c;
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < script.size() && script[i + 1] == '/') {
            while (i < script.size() && script[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < script.size() && script[i + 1] == '*') {
            size_t close = script.find("*/", i + 2);
            i = close == std::string::npos ? script.size() : close + 2;
            continue;
        }
        if (c == ';') {
            auto trimmed = util::trim(current);
            if (!trimmed.empty()) out.emplace_back(trimmed);
            current.clear();
            ++i;
            continue;
        }
        current += c;
        ++i;
    }
    auto trimmed = util::trim(current);
    if (!trimmed.empty()) out.emplace_back(trimmed);
    return out;
}

}  // namespace cypherforge::graph
