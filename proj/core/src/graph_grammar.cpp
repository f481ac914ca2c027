#include "cypherforge/graph/grammar.hpp"

namespace cypherforge::graph {

namespace {
constexpr std::string_view kGrammar = R"EBNF((* Cypher subset accepted by the embedded engine. One statement per parse;
   scripts split on top-level semicolons. Keywords are case-insensitive.
   Constructs outside this grammar (UNION, FOREACH, CASE, CALL, DELETE,
   REMOVE, UNWIND, transactions, schema DDL, parameters, subscripts,
   regex matches, chained comparisons) are rejected as unsupported. *)

query          = clause , { clause } ;
clause         = match | create | merge | set | with | return ;

match          = [ "OPTIONAL" ] , "MATCH" , pattern-part , { "," , pattern-part } ,
                 [ "WHERE" , expr ] ;
create         = "CREATE" , pattern-part , { "," , pattern-part } ;
merge          = "MERGE" , node-pattern ;                     (* single node only *)
set            = "SET" , set-item , { "," , set-item } ;
set-item       = identifier , "." , identifier , "=" , expr ;
with           = "WITH" , projection , [ "WHERE" , expr ] ;
return         = "RETURN" , projection ;

projection     = [ "DISTINCT" ] , proj-item , { "," , proj-item } ,
                 [ "ORDER" , "BY" , sort-item , { "," , sort-item } ] ,
                 [ "SKIP" , integer ] , [ "LIMIT" , integer ] ;
proj-item      = expr , [ "AS" , identifier ] ;
sort-item      = expr , [ "ASC" | "ASCENDING" | "DESC" | "DESCENDING" ] ;

pattern-part   = [ identifier , "=" ] , ( shortest-path | pattern-elem ) ;
shortest-path  = "shortestPath" , "(" , pattern-elem , ")" ;   (* exactly one hop *)
pattern-elem   = node-pattern , { edge-pattern , node-pattern } ;
node-pattern   = "(" , [ identifier ] , { ":" , identifier } , [ property-map ] , ")" ;
edge-pattern   = ( "-" | "<-" ) , [ "[" , [ identifier ] ,
                 [ ":" , identifier , { "|" , [ ":" ] , identifier } ] ,
                 [ var-length ] , [ property-map ] , "]" ] , ( "-" | "->" ) ;
var-length     = "*" , [ integer ] , [ ".." , [ integer ] ] ;  (* hops capped at 8 *)
property-map   = "{" , [ identifier , ":" , expr ,
                 { "," , identifier , ":" , expr } ] , "}" ;

expr           = or-expr ;
or-expr        = and-expr , { "OR" , and-expr } ;
and-expr       = not-expr , { "AND" , not-expr } ;
not-expr       = "NOT" , not-expr | comparison ;
comparison     = additive , [ comp-op , additive
                            | "IN" , additive
                            | "CONTAINS" , additive
                            | "STARTS" , "WITH" , additive
                            | "ENDS" , "WITH" , additive
                            | "IS" , [ "NOT" ] , "NULL" ] ;
comp-op        = "=" | "<>" | "<" | "<=" | ">" | ">=" ;
additive       = multiplicative , { ( "+" | "-" ) , multiplicative } ;
multiplicative = unary , { ( "*" | "/" | "%" ) , unary } ;
unary          = "-" , unary | postfix ;
postfix        = primary , { "." , identifier } ;
primary        = literal | identifier | function-call | "(" , expr , ")"
               | list-literal | map-literal ;
function-call  = identifier , "(" , [ "DISTINCT" ] ,
                 [ "*" | expr , { "," , expr } ] , ")" ;
list-literal   = "[" , [ expr , { "," , expr } ] , "]" ;
map-literal    = property-map ;
literal        = integer | float | string | "TRUE" | "FALSE" | "NULL" ;

(* Aggregates: count sum avg min max collect, each optionally DISTINCT,
   count additionally accepting "*". Aggregates appear only as a bare
   projection item. Scalar functions: id labels type length size nodes
   relationships coalesce toLower toUpper toString abs date datetime
   localdatetime localtime time duration point. *)
)EBNF";
}  // namespace

std::string_view supported_grammar() { return kGrammar; }

}  // namespace cypherforge::graph
