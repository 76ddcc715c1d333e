import math
import random

import pytest

from retrospace.exceptions import MissingElementError, PreconditionError
from retrospace.services.gusf import GusfCatalog, lowest_color


def positions(model):
    return {id(element): index for index, element in enumerate(model)}


def run_against_model(seed, steps, num_colors=8, block_size=4, audit_every=25):
    rng = random.Random(seed)
    catalog = GusfCatalog(num_colors=num_colors, block_size=block_size)
    model = []
    for step in range(steps):
        action = rng.random()
        if action < 0.4 or not model:
            after = rng.choice(model) if model and rng.random() < 0.9 else None
            element = catalog.add(('item', step), after)
            index = model.index(after) + 1 if after is not None else 0
            model.insert(index, element)
        elif action < 0.55:
            victim = rng.choice(model)
            for color in list(range(num_colors)):
                if victim.colors >> color & 1:
                    catalog.unmark(victim, color)
            catalog.remove(victim)
            model.remove(victim)
        elif action < 0.8:
            element = rng.choice(model)
            color = rng.randrange(num_colors)
            if element.colors >> color & 1:
                catalog.unmark(element, color)
            elif bin(element.colors).count('1') < 2:
                catalog.mark(element, color)
        if not model:
            continue
        colors = rng.randrange(1, 1 << num_colors)
        where = positions(model)
        start = rng.choice(model)
        ahead = [element for element in model[where[id(start)]:] if element.colors & colors]
        behind = [element for element in model[:where[id(start)] + 1] if element.colors & colors]
        assert catalog.find_next(start, colors) is (ahead[0] if ahead else None)
        assert catalog.find_prev(start, colors) is (behind[-1] if behind else None)
        everything = [element for element in model if element.colors & colors]
        assert catalog.find_next(None, colors) is (everything[0] if everything else None)
        assert catalog.find_prev(None, colors) is (everything[-1] if everything else None)
        first, last = sorted((rng.choice(model), rng.choice(model)), key=lambda element: where[id(element)])
        expected = [element for element in model[where[id(first)]:where[id(last)] + 1] if element.colors & colors]
        reported = catalog.report(first, last, colors)
        assert sorted(reported, key=lambda element: where[id(element)]) == expected
        assert len(reported) == len({id(element) for element in reported})
        if where[id(first)] < where[id(last)]:
            assert catalog.report(last, first, colors) == []
        if step % audit_every == 0:
            catalog.audit()
            assert list(catalog) == model
    catalog.audit()
    assert list(catalog) == model
    assert len(catalog) == len(model)
    return catalog


@pytest.mark.parametrize('seed', range(6))
def test_matches_list_model(seed):
    catalog = run_against_model(seed, 500)
    assert catalog.counters.catalog_ops > 0


def test_splits_and_rebuilds_happen():
    catalog = run_against_model(11, 800, block_size=2)
    assert catalog.counters.block_splits > 0
    assert catalog.counters.rebuilds > 0


def test_default_block_size_grows_with_capacity():
    catalog = GusfCatalog.from_sorted([(index, 0) for index in range(5000)])
    assert catalog.block_size == 13 ** 2
    catalog.audit()
    assert [element.item for element in catalog] == list(range(5000))


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(100))
def test_matches_list_model_acceptance(seed):
    run_against_model(seed, 10000, num_colors=52, block_size=None, audit_every=1000)


def test_from_sorted_colors_and_report():
    entries = [('a', 0b001), ('b', 0), ('c', 0b010), ('d', 0b101), ('e', 0b100)]
    catalog = GusfCatalog.from_sorted(entries, num_colors=3)
    elements = list(catalog)
    assert [element.item for element in elements] == list('abcde')
    assert [element.item for element in catalog.report(None, None, 0b101)] == ['a', 'd', 'e']
    assert catalog.find_next(elements[1], 0b100).item == 'd'
    assert catalog.find_prev(elements[1], 0b010) is None
    catalog.audit()


def test_report_lists_multicolored_element_once():
    catalog = GusfCatalog.from_sorted([(index, 0b11 if index % 3 == 0 else 0b10) for index in range(200)],
                                      num_colors=2, block_size=4)
    reported = catalog.report(None, None, 0b11)
    assert sorted(element.item for element in reported) == list(range(200))


def test_lowest_color():
    assert lowest_color(0b1000) == 3
    assert lowest_color(0b0110) == 1


def test_precondition_errors():
    catalog = GusfCatalog(num_colors=4, color_cap=2)
    element = catalog.add('x')
    catalog.mark(element, 1)
    with pytest.raises(PreconditionError):
        catalog.mark(element, 1)
    catalog.mark(element, 2)
    with pytest.raises(PreconditionError):
        catalog.mark(element, 3)
    with pytest.raises(PreconditionError):
        catalog.remove(element)
    with pytest.raises(PreconditionError):
        catalog.unmark(element, 0)
    catalog.unmark(element, 1)
    catalog.unmark(element, 2)
    catalog.remove(element)
    with pytest.raises(MissingElementError):
        catalog.remove(element)
    with pytest.raises(PreconditionError):
        GusfCatalog.from_sorted([('y', 1 << 4)], num_colors=4)


def test_add_shifts_only_the_tail_of_its_block():
    catalog = GusfCatalog(num_colors=4, block_size=8)
    assert catalog._block_cap() == 32
    elements = [catalog.add(0)]
    for index in range(1, 12):
        elements.append(catalog.add(index, elements[-1]))
    for element in elements[::3]:
        catalog.mark(element, 1)
    counters = catalog.counters
    before = counters.block_work
    catalog.add('tail', elements[-1])
    # one leaf plus its five ancestors
    assert counters.block_work - before == 6
    before = counters.block_work
    catalog.add('head')
    assert counters.block_work - before == 14 + 15
    catalog.audit()
    assert [element.item for element in catalog] == ['head'] + list(range(12)) + ['tail']
    assert [element.item for element in catalog.report(None, None, 0b10)] == [0, 3, 6, 9]


def test_block_work_per_add_is_bounded_by_the_block():
    rng = random.Random(5)
    catalog = GusfCatalog(num_colors=4, block_size=8)
    model = []
    for step in range(400):
        before = catalog.counters.block_work
        model.append(catalog.add(step, rng.choice(model) if model else None))
        assert catalog.counters.block_work - before <= 2 * catalog._block_cap()
    assert catalog.counters.block_splits > 0
    catalog.audit()


def structural_work_per_op(m, seed):
    """Counted catalog, index, relabel and rebuild work per operation, over log log n"""
    rng = random.Random(seed)
    catalog = GusfCatalog(num_colors=52)
    model = []
    peak = 0
    for step in range(m):
        action = rng.random()
        if action < 0.5 or not model:
            model.append(catalog.add(step, rng.choice(model) if model else None))
        elif action < 0.85:
            element = rng.choice(model)
            color = rng.randrange(52)
            if element.colors >> color & 1:
                catalog.unmark(element, color)
            elif bin(element.colors).count('1') < 2:
                catalog.mark(element, color)
        else:
            victim = model.pop(rng.randrange(len(model)))
            for color in range(52):
                if victim.colors >> color & 1:
                    catalog.unmark(victim, color)
            catalog.remove(victim)
        peak = max(peak, len(catalog))
    catalog.audit()
    counters = catalog.counters
    work = counters.catalog_ops + counters.gveb_levels + counters.relabels + counters.rebuild_work
    return work / (m * math.log2(math.log2(max(peak, 16))))


@pytest.mark.parametrize('m', (1000, 10000))
def test_structural_work_is_log_log_amortized(m):
    assert structural_work_per_op(m, seed=m) <= 16


@pytest.mark.slow
def test_structural_work_is_log_log_amortized_large():
    assert structural_work_per_op(100000, seed=1) <= 16
