#pragma once

// A strict 2-shaded tensor category built on top of the diagram algebras.
//
// Objects are labels [n,+] / [n,-].  A morphism [m,?] -> [n,?] is stored as a
// triple: its "endomorphism representation" lives in the diagram algebra at
// strand count (m+n)/2, shifted by one extra boundary strand for shaded
// labels (those representations sit in the column-1-through subalgebra).
// Composition folds the mismatch between source and target levels into
// partial-projection insertions and iterated right expectations; the tensor
// product combines a right insertion (suffix identities) with an even strand
// shift (prefix identities).

#include <optional>
#include <utility>

#include "subfactorlab/errors.hpp"
#include "subfactorlab/tl.hpp"

namespace sfl {

// Label [n,+] (shaded=false) or [n,-] (shaded=true).
struct ObjectLabel {
    int n = 0;
    bool shaded = false;

    friend bool operator==(const ObjectLabel& a, const ObjectLabel& b) {
        return a.n == b.n && a.shaded == b.shaded;
    }
    friend bool operator!=(const ObjectLabel& a, const ObjectLabel& b) { return !(a == b); }
};

// Conjugate label: fixes even labels, swaps the shading of odd ones.
ObjectLabel bar(ObjectLabel o);

// Shading of the region at the right edge of the label's strand block.
bool right_edge_shaded(ObjectLabel o);

// Tensor product of labels; empty when the inner shadings disagree (the
// product object vanishes).
std::optional<ObjectLabel> object_tensor(ObjectLabel a, ObjectLabel b);

// Morphism as (representation, source, target).  `zero_object` marks the
// absorbing zero arising from vanishing object tensors.
struct TripleMorphism {
    bool zero_object = false;
    ObjectLabel source;
    ObjectLabel target;
    TLElement endo;
};

// Strand count at which the representation of a (source -> target) morphism
// lives: the average of the endpoints plus the boundary strand for shaded
// labels.
int rep_level(ObjectLabel source, ObjectLabel target);

// Builds a validated triple.  Throws InputError when the labels are not
// connectable, the representation sits at the wrong strand count, or a
// shaded-type representation does not keep the boundary strand through.
TripleMorphism make_triple(TLElement endo, ObjectLabel source, ObjectLabel target);

// The absorbing zero morphism.
TripleMorphism planar_zero();

// Identity on [n,+] or [n,-].
TripleMorphism planar_identity(ObjectLabel o, double d);

// Adjoint: swaps source and target and stars the representation.
TripleMorphism planar_dagger(const TripleMorphism& f);

// Shared index arithmetic of the composition case split.  For a pair
// f : [a] -> [b], g : [b] -> [c] (single shading), the shape of the profile
// (a, b, c) picks one of three primary cases; profiles descending overall are
// routed through adjoints.
struct CompositionCase {
    bool dagger_route = false;
    int kind = 1; // 1 ascending, 2 peak, 3 dip
    int n = 0, i = 0, j = 0;
};
CompositionCase classify_composition(int a, int b, int c);

// g after f.  Throws DimensionMismatchError unless f.target == g.source.
TripleMorphism compose(const TripleMorphism& g, const TripleMorphism& f);

// f tensor the identity of `suffix` on the right.  Returns the zero morphism
// when the shadings make the product object vanish.
TripleMorphism tensor_id_right(const TripleMorphism& f, ObjectLabel suffix);

// Identity of `prefix` tensor f on the left.
TripleMorphism tensor_id_left(ObjectLabel prefix, const TripleMorphism& f);

// x tensor y, defined as (x (x) 1) after (1 (x) y).
TripleMorphism tensor(const TripleMorphism& x, const TripleMorphism& y);

// Duality data: coev : unit -> X (x) bar(X), ev : bar(X) (x) X -> unit, both
// with representation d^n times the identity.
TripleMorphism coev_morphism(ObjectLabel X, double d);
TripleMorphism ev_morphism(ObjectLabel X, double d);

// Left and right categorical traces of an endomorphism triple, evaluated via
// the duality morphisms.  Throws InputError unless source == target.
std::pair<cx, cx> pivotal_traces(const TripleMorphism& f);

// Coefficient of the identity in a scalar ([0,?] -> [0,?]) triple.
cx scalar_part(const TripleMorphism& t);

// Deviation between two triples: infinite-surrogate (1e100) when labels or
// zero flags disagree, otherwise the coefficient distance of representations.
double triple_distance(const TripleMorphism& a, const TripleMorphism& b);

} // namespace sfl
